#include "hydrocast/feature_selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "hydrocast/catalog.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/random.hpp"

namespace hydrocast {
namespace {

double norm_of(std::span<const double> v, CosineNorm norm) {
  double acc = 0.0;
  if (norm == CosineNorm::kL2) {
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
  }
  for (double x : v) acc += std::abs(x);
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b, CosineNorm norm) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw Error(ErrorCode::kLengthMismatch, "empty vectors");
  const double na = norm_of(a, norm);
  const double nb = norm_of(b, norm);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroNormVector, "zero-norm vector");
  const double c = dot(a, b) / (na * nb);
  return norm == CosineNorm::kL2 ? std::clamp(c, -1.0, 1.0) : c;
}

PruneResult prune_colinear(const Matrix& x, std::span<const std::size_t> columns,
                           const ColinearityConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "gamma must lie in (0, 1]");
  }
  if (columns.empty()) throw Error(ErrorCode::kEmptyInput, "no columns to prune");
  std::vector<std::size_t> order(columns.begin(), columns.end());
  std::sort(order.begin(), order.end());

  std::vector<std::vector<double>> cols;
  std::vector<double> norms;
  for (std::size_t c : order) {
    if (c >= x.cols()) throw Error(ErrorCode::kShapeMismatch, "column out of range");
    cols.push_back(x.column(c));
    norms.push_back(norm_of(cols.back(), cfg.norm));
    if (norms.back() == 0.0) {
      throw Error(ErrorCode::kZeroNormColumn, std::to_string(c));
    }
  }

  PruneResult result;
  std::vector<bool> dropped(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (dropped[i]) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (dropped[j]) continue;
      double c = dot(cols[i], cols[j]) / (norms[i] * norms[j]);
      if (cfg.norm == CosineNorm::kL2) c = std::clamp(c, -1.0, 1.0);
      if (std::abs(c) >= cfg.gamma) {
        dropped[j] = true;
        result.dropped.push_back({order[i], order[j], c});
      }
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!dropped[i]) result.kept.push_back(order[i]);
  }
  return result;
}

PruneResult prune_colinear(const Matrix& x, const ColinearityConfig& cfg) {
  std::vector<std::size_t> all(x.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return prune_colinear(x, all, cfg);
}

// ---------------------------------------------------------------------------

double BoostedModel::predict(std::span<const double> x) const {
  double out = base;
  for (const auto& stage : stages) {
    double sum = 0.0;
    for (const auto& tree : stage) sum += tree.predict(x);
    out += rho * sum / static_cast<double>(stage.size());
  }
  return out;
}

std::size_t BoostedModel::tree_count() const {
  std::size_t n = 0;
  for (const auto& stage : stages) n += stage.size();
  return n;
}

BoostedModel fit_boosted(const Matrix& x, std::span<const double> y, const BoostConfig& cfg,
                         std::span<const std::size_t> candidate_features) {
  if (x.rows() < 2 || y.size() < 2) throw Error(ErrorCode::kEmptyInput, "need >= 2 samples");
  if (x.rows() != y.size()) throw Error(ErrorCode::kShapeMismatch, "rows vs targets");
  if (cfg.trees_per_stage < 1 || cfg.max_stages < 1 || !(cfg.rho > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "trees_per_stage, max_stages >= 1 and rho > 0");
  }

  BoostedModel model;
  model.rho = cfg.rho;
  model.n_features = x.cols();
  if (candidate_features.empty()) {
    model.candidate_features.resize(x.cols());
    std::iota(model.candidate_features.begin(), model.candidate_features.end(), std::size_t{0});
  } else {
    model.candidate_features.assign(candidate_features.begin(), candidate_features.end());
    std::sort(model.candidate_features.begin(), model.candidate_features.end());
  }
  const std::size_t n_candidates = model.candidate_features.size();
  const std::size_t per_tree = std::clamp<std::size_t>(
      cfg.features_per_tree.value_or(static_cast<std::size_t>(
          std::ceil(std::sqrt(static_cast<double>(n_candidates))))),
      1, n_candidates);

  const std::size_t n = y.size();
  const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  model.base = constant ? y[0] : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> fitted(n, model.base);
  std::vector<double> residual(n);
  const auto refresh = [&] {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = y[i] - fitted[i];
      if (!std::isfinite(residual[i])) {
        throw Error(ErrorCode::kNonFiniteResidual, "residual at row " + std::to_string(i));
      }
      sse += residual[i] * residual[i];
    }
    return sse / static_cast<double>(n);
  };
  model.training_mse_per_stage.push_back(refresh());

  for (std::size_t stage = 0; stage < cfg.max_stages; ++stage) {
    const double previous = model.training_mse_per_stage.back();
    if (previous == 0.0) break;

    std::vector<RegressionTree> trees;
    trees.reserve(cfg.trees_per_stage);
    std::vector<double> stage_sum(n, 0.0);
    for (std::size_t t = 0; t < cfg.trees_per_stage; ++t) {
      const std::uint64_t tree_seed = derive_seed(cfg.seed, stage, t);
      Rng rng(tree_seed);
      TreeConfig tree_cfg = cfg.weak_tree;
      tree_cfg.seed = tree_seed;
      std::vector<std::size_t> subset;
      for (std::size_t p : rng.sample_without_replacement(n_candidates, per_tree)) {
        subset.push_back(model.candidate_features[p]);
      }
      tree_cfg.feature_subset = std::move(subset);
      trees.push_back(fit_tree(x, residual, tree_cfg));
      for (std::size_t i = 0; i < n; ++i) stage_sum[i] += trees.back().predict(x.row(i));
    }
    const double scale = cfg.rho / static_cast<double>(cfg.trees_per_stage);
    for (std::size_t i = 0; i < n; ++i) fitted[i] += scale * stage_sum[i];
    model.stages.push_back(std::move(trees));
    const double mse = refresh();
    model.training_mse_per_stage.push_back(mse);
    if ((previous - mse) / previous < cfg.stop_tolerance) break;
  }
  return model;
}

std::map<std::size_t, std::size_t> rank_features(const BoostedModel& model, OccurrenceMode mode) {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t f : model.candidate_features) counts[f] = 0;
  for (const auto& stage : model.stages) {
    for (const auto& tree : stage) {
      const auto used = mode == OccurrenceMode::kPerTree ? tree.features_used()
                                                         : tree.split_features();
      for (std::size_t f : used) ++counts[f];
    }
  }
  return counts;
}

std::vector<std::size_t> select_top_k(const std::map<std::size_t, std::size_t>& occurrence,
                                      std::size_t kappa) {
  if (kappa < 1) throw Error(ErrorCode::kInvalidConfig, "kappa must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> ranked;
  for (const auto& [feature, count] : occurrence) {
    if (count > 0) ranked.emplace_back(feature, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ranked.size() && i < kappa; ++i) out.push_back(ranked[i].first);
  return out;
}

SelectionResult select_features(const Matrix& x, std::span<const double> y,
                                const SelectionConfig& cfg) {
  auto pruned = prune_colinear(x, cfg.colinearity);
  const auto model = fit_boosted(x, y, cfg.boost, pruned.kept);

  SelectionResult result;
  result.kept_after_prune = std::move(pruned.kept);
  result.dropped_pairs = std::move(pruned.dropped);
  result.occurrence = rank_features(model, cfg.occurrence_mode);
  result.kappa = cfg.kappa;
  result.top_k = select_top_k(result.occurrence, cfg.kappa);
  result.training_mse_per_stage = model.training_mse_per_stage;
  result.trees_fitted = model.tree_count();
  return result;
}

// ---------------------------------------------------------------------------

namespace {

// Selections over arbitrary matrices (tests, pooled runs on fewer columns)
// fall back to numeric keys.
std::string column_key(std::size_t f) {
  return f < kNumFeatures ? feature_name(f) : "f" + std::to_string(f);
}

std::size_t column_from_key(const std::string& key) {
  if (key.size() > 1 && key[0] == 'f' && std::isdigit(static_cast<unsigned char>(key[1]))) {
    return std::stoul(key.substr(1));
  }
  return parse_feature_name(key).feature_index();
}

}  // namespace

nlohmann::json to_json(const SelectionResult& result) {
  nlohmann::json doc;
  auto kept = nlohmann::json::array();
  for (std::size_t f : result.kept_after_prune) kept.push_back(column_key(f));
  auto dropped = nlohmann::json::array();
  for (const auto& d : result.dropped_pairs) {
    dropped.push_back({{"kept", column_key(d.kept)},
                       {"dropped", column_key(d.dropped)},
                       {"cosine", d.cosine}});
  }
  // Occurrence rows in rank order, then catalog order for ties.
  auto occurrence = nlohmann::json::array();
  std::vector<std::pair<std::size_t, std::size_t>> rows(result.occurrence.begin(),
                                                        result.occurrence.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [f, count] : rows) {
    occurrence.push_back({{"feature", column_key(f)}, {"count", count}});
  }
  auto top = nlohmann::json::array();
  for (std::size_t f : result.top_k) top.push_back(column_key(f));

  doc["kept_after_prune"] = std::move(kept);
  doc["dropped_pairs"] = std::move(dropped);
  doc["occurrence"] = std::move(occurrence);
  doc["kappa"] = result.kappa;
  doc["top_k"] = std::move(top);
  doc["training_mse_per_stage"] = result.training_mse_per_stage;
  doc["trees_fitted"] = result.trees_fitted;
  return doc;
}

SelectionResult selection_from_json(const nlohmann::json& doc) {
  try {
    SelectionResult r;
    for (const auto& k : doc.at("kept_after_prune")) {
      r.kept_after_prune.push_back(column_from_key(k.get<std::string>()));
    }
    for (const auto& d : doc.at("dropped_pairs")) {
      r.dropped_pairs.push_back({column_from_key(d.at("kept").get<std::string>()),
                                 column_from_key(d.at("dropped").get<std::string>()),
                                 d.at("cosine").get<double>()});
    }
    for (const auto& o : doc.at("occurrence")) {
      r.occurrence[column_from_key(o.at("feature").get<std::string>())] =
          o.at("count").get<std::size_t>();
    }
    r.kappa = doc.at("kappa").get<std::size_t>();
    for (const auto& t : doc.at("top_k")) r.top_k.push_back(column_from_key(t.get<std::string>()));
    r.training_mse_per_stage = doc.at("training_mse_per_stage").get<std::vector<double>>();
    r.trees_fitted = doc.at("trees_fitted").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("selection json: ") + e.what());
  }
}

}  // namespace hydrocast
