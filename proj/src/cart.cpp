#include "hydrocast/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hydrocast/error.hpp"
#include "hydrocast/random.hpp"

namespace hydrocast {

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw Error(ErrorCode::kEmptyInput, "tree has no nodes");
  const auto count = static_cast<int>(nodes_.size());
  for (int i = 0; i < count; ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) continue;
    if (static_cast<std::size_t>(node.feature) >= n_features_ || node.left <= i ||
        node.right <= i || node.left >= count || node.right >= count) {
      throw Error(ErrorCode::kShapeMismatch, "malformed tree node " + std::to_string(i));
    }
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error(ErrorCode::kShapeMismatch, "tree expects " + std::to_string(n_features_) +
                                               " features, got " + std::to_string(x.size()));
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].value;
}

std::vector<std::size_t> RegressionTree::features_used() const {
  auto features = split_features();
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  return features;
}

std::vector<std::size_t> RegressionTree::split_features() const {
  std::vector<std::size_t> out;
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) out.push_back(static_cast<std::size_t>(node.feature));
  }
  return out;
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[nodes_[i].left] = level[i] + 1;
      level[nodes_[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double sse = 0.0;
  std::size_t n_left = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeConfig& cfg)
      : x_(x), y_(y), cfg_(cfg), rng_(cfg.seed) {
    if (cfg.feature_subset) {
      candidates_ = *cfg.feature_subset;
      std::sort(candidates_.begin(), candidates_.end());
      candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
      for (std::size_t f : candidates_) {
        if (f >= x.cols()) {
          throw Error(ErrorCode::kShapeMismatch,
                      "feature_subset index " + std::to_string(f) + " out of range");
        }
      }
    } else {
      candidates_.resize(x.cols());
      std::iota(candidates_.begin(), candidates_.end(), std::size_t{0});
    }
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, int depth) {
    const auto id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{.value = mean(rows), .n = rows.size()});
    if (depth >= cfg_.max_depth || rows.size() < 2 * cfg_.min_samples_leaf || constant(rows)) {
      return id;
    }
    const auto best = find_split(rows);
    if (!best) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x_(r, best->feature) <= best->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = nodes_[id];
    node.feature = static_cast<int>(best->feature);
    node.threshold = best->threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  double mean(const std::vector<std::size_t>& rows) const {
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    return sum / static_cast<double>(rows.size());
  }

  bool constant(const std::vector<std::size_t>& rows) const {
    const double first = y_[rows.front()];
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return y_[r] == first; });
  }

  std::vector<std::size_t> node_candidates() {
    if (!cfg_.max_features || *cfg_.max_features >= candidates_.size()) return candidates_;
    const auto picks = rng_.sample_without_replacement(candidates_.size(),
                                                       std::max<std::size_t>(1, *cfg_.max_features));
    std::vector<std::size_t> out;
    for (std::size_t p : picks) out.push_back(candidates_[p]);
    return out;
  }

  std::optional<SplitCandidate> find_split(const std::vector<std::size_t>& rows) {
    const std::size_t n = rows.size();
    const double node_mean = mean(rows);
    // Targets are centred on the node mean before accumulating squares to
    // limit cancellation in sum(y^2) - sum(y)^2 / n.
    double total = 0.0;
    double total_sq = 0.0;
    for (std::size_t r : rows) {
      const double d = y_[r] - node_mean;
      total += d;
      total_sq += d * d;
    }
    const double tolerance = 1e-12 * std::max(total_sq, 1e-300);

    std::optional<SplitCandidate> best;
    std::vector<std::pair<double, double>> sorted(n);  // (x, centred y)
    for (std::size_t f : node_candidates()) {
      for (std::size_t i = 0; i < n; ++i) {
        sorted[i] = {x_(rows[i], f), y_[rows[i]] - node_mean};
      }
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      double left_sq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += sorted[i].second;
        left_sq += sorted[i].second * sorted[i].second;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (sorted[i].first == sorted[i + 1].first) continue;
        if (n_left < cfg_.min_samples_leaf || n_right < cfg_.min_samples_leaf) continue;
        const double right_sum = total - left_sum;
        const double right_sq = total_sq - left_sq;
        const double sse = (left_sq - left_sum * left_sum / static_cast<double>(n_left)) +
                           (right_sq - right_sum * right_sum / static_cast<double>(n_right));
        // Candidates arrive in (feature, threshold) order, so only a strictly
        // better SSE may replace the incumbent.
        if (!best || sse < best->sse - tolerance) {
          const double lo = sorted[i].first;
          const double hi = sorted[i + 1].first;
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = SplitCandidate{f, threshold, sse, n_left};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const TreeConfig& cfg_;
  Rng rng_;
  std::vector<std::size_t> candidates_;
  std::vector<TreeNode> nodes_;
};

void check_inputs(const Matrix& x, std::span<const double> y, const TreeConfig& cfg) {
  if (x.rows() == 0 || y.empty()) throw Error(ErrorCode::kEmptyInput, "fit_tree on no samples");
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(x.rows()) + " rows vs " +
                                               std::to_string(y.size()) + " targets");
  }
  if (cfg.max_depth < 1 || cfg.min_samples_leaf < 1) {
    throw Error(ErrorCode::kInvalidConfig, "max_depth and min_samples_leaf must be >= 1");
  }
}

}  // namespace

RegressionTree fit_tree(const Matrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const TreeConfig& cfg) {
  check_inputs(x, y, cfg);
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "fit_tree on no rows");
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw Error(ErrorCode::kShapeMismatch, "row index out of range");
  }
  TreeBuilder builder(x, y, cfg);
  return RegressionTree(builder.build({rows.begin(), rows.end()}), x.cols());
}

RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeConfig& cfg) {
  check_inputs(x, y, cfg);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree(x, y, rows, cfg);
}

nlohmann::json to_json(const RegressionTree& tree) {
  auto nodes = nlohmann::json::array();
  for (const auto& node : tree.nodes()) {
    nlohmann::json j;
    if (!node.is_leaf()) {
      j["feature"] = node.feature;
      j["threshold"] = node.threshold;
      j["left"] = node.left;
      j["right"] = node.right;
    }
    j["value"] = node.value;
    j["n"] = node.n;
    nodes.push_back(std::move(j));
  }
  return {{"n_features", tree.n_features()}, {"nodes", std::move(nodes)}};
}

RegressionTree tree_from_json(const nlohmann::json& doc) {
  try {
    std::vector<TreeNode> nodes;
    for (const auto& j : doc.at("nodes")) {
      TreeNode node;
      node.value = j.at("value").get<double>();
      node.n = j.at("n").get<std::size_t>();
      if (j.contains("feature")) {
        node.feature = j.at("feature").get<int>();
        node.threshold = j.at("threshold").get<double>();
        node.left = j.at("left").get<int>();
        node.right = j.at("right").get<int>();
      }
      nodes.push_back(node);
    }
    return RegressionTree(std::move(nodes), doc.at("n_features").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("tree json: ") + e.what());
  }
}

}  // namespace hydrocast
