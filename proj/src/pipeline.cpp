#include "hydrocast/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hydrocast/error.hpp"
#include "hydrocast/random.hpp"
#include "hydrocast/text.hpp"

namespace hydrocast {
namespace {

constexpr std::uint64_t kSelectTag = 0x73656c656374ULL;
constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;
constexpr std::uint64_t kLearnTag = 0x6c6561726eULL;

nlohmann::json point_json(const IndexPoint& p) {
  return {{"lon", p.lon}, {"lat", p.lat}, {"elev", p.elev}, {"id", p.id}};
}

Error with_point(const IndexPoint& point, const Error& e) {
  return Error(e.code(), "point " + point.key() + ": " + e.what());
}

}  // namespace

void PipelineConfig::validate() const {
  if (selection.kappa < 1) throw Error(ErrorCode::kInvalidConfig, "kappa must be >= 1");
  if (!(selection.colinearity.gamma > 0.0 && selection.colinearity.gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "gamma must lie in (0, 1]");
  }
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw Error(ErrorCode::kFractionOutOfRange, "train_fraction must lie in (0, 1)");
  }
  const auto& b = selection.boost;
  if (b.trees_per_stage < 1 || b.max_stages < 1 || !(b.rho > 0.0) || b.weak_tree.max_depth < 1 ||
      b.weak_tree.min_samples_leaf < 1) {
    throw Error(ErrorCode::kInvalidConfig, "boosting parameters out of range");
  }
  std::vector<LearnerKind> kinds;
  for (const auto& spec : learners) {
    spec.validate();
    if (std::find(kinds.begin(), kinds.end(), spec.kind) != kinds.end()) {
      throw Error(ErrorCode::kDuplicateKind, std::string(kind_name(spec.kind)));
    }
    kinds.push_back(spec.kind);
  }
}

std::uint64_t point_seed(std::uint64_t seed, const IndexPoint& point) {
  // FNV-1a over the location key; std::hash is not stable across implementations.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : point.key()) h = (h ^ c) * 0x100000001b3ULL;
  return derive_seed(seed, h);
}

SelectionConfig selection_config_for(const PipelineConfig& cfg, const IndexPoint& point) {
  SelectionConfig out = cfg.selection;
  out.boost.seed = derive_seed(point_seed(cfg.seed, point), kSelectTag);
  return out;
}

SplitSpec split_spec_for(const PipelineConfig& cfg, const IndexPoint& point) {
  SplitSpec out = cfg.split;
  out.seed = derive_seed(point_seed(cfg.seed, point), kSplitTag);
  return out;
}

std::vector<LearnerSpec> learner_specs_for(const PipelineConfig& cfg, const IndexPoint& point) {
  const std::uint64_t base = derive_seed(point_seed(cfg.seed, point), kLearnTag);
  std::vector<LearnerSpec> out = cfg.learners;
  for (auto& spec : out) spec.seed = derive_seed(base, static_cast<std::uint64_t>(spec.kind));
  return out;
}

Dataset selection_rows(const Dataset& data, const PipelineConfig& cfg) {
  if (cfg.select_on_all) return data;
  return split(data, split_spec_for(cfg, data.point)).first;
}

SelectionResult select_for_point(const Dataset& data, const PipelineConfig& cfg) {
  const Dataset rows = selection_rows(data, cfg);
  return select_features(rows.features, rows.precip, selection_config_for(cfg, data.point));
}

SelectionResult select_pooled(const std::vector<Dataset>& data, const PipelineConfig& cfg) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no points to pool");
  Dataset pooled;
  pooled.features = Matrix(0, kNumFeatures);
  for (const auto& d : data) {
    if (d.empty()) continue;
    const Dataset rows = selection_rows(d, cfg);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      pooled.features.append_row(rows.features.row(r));
      pooled.precip.push_back(rows.precip[r]);
    }
  }
  SelectionConfig sel = cfg.selection;
  sel.boost.seed = derive_seed(cfg.seed, kSelectTag);
  return select_features(pooled.features, pooled.precip, sel);
}

std::map<LearnerKind, FittedModel> train_point(const Dataset& data,
                                               const SelectionResult& selection,
                                               const PipelineConfig& cfg) {
  if (selection.top_k.empty()) {
    throw Error(ErrorCode::kEmptyInput, "selection produced no features");
  }
  const auto train = split(data, split_spec_for(cfg, data.point)).first;
  const Matrix x = train.features.select_columns(selection.top_k);
  const auto specs = learner_specs_for(cfg, data.point);
  return fit_all(specs, x, train.precip, selection.top_k);
}

std::vector<EvalResult> evaluate_point(const Dataset& data,
                                       const std::map<LearnerKind, FittedModel>& models,
                                       const PipelineConfig& cfg) {
  const auto test = split(data, split_spec_for(cfg, data.point)).second;
  std::vector<EvalResult> out;
  for (const auto& [kind, model] : models) {
    const Matrix x = test.features.select_columns(model.feature_indices());
    const auto predicted = model.predict(x);
    try {
      out.push_back(evaluate(data.point, kind, test.precip, predicted));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(kind_name(kind)) + ": " + e.what());
    }
  }
  return out;
}

namespace {

Error missing_point(const PipelineConfig& cfg, const IndexPoint& p) {
  return Error(ErrorCode::kEmptyDataset, "no rows for point " + p.key() + " in " + cfg.data_path.string());
}

void require_rows(const PipelineConfig& cfg, const Dataset& d) {
  if (d.empty()) throw missing_point(cfg, d.point);
}

}  // namespace

std::vector<Dataset> load_points(const PipelineConfig& cfg) {
  auto all = load_csv_all(cfg.data_path);
  if (cfg.index_points.empty()) return all;
  std::vector<Dataset> out;
  for (const auto& p : cfg.index_points) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const Dataset& d) { return d.point.same_location(p); });
    if (it == all.end()) {
      if (!cfg.continue_on_error) throw missing_point(cfg, p);
      // Kept as an empty dataset so the failure is recorded for this point.
      Dataset empty;
      empty.point = p;
      out.push_back(std::move(empty));
      continue;
    }
    Dataset d = *it;
    d.point = p;
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

std::filesystem::path point_dir(const std::filesystem::path& output_dir, const IndexPoint& point) {
  return output_dir / point.key();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

namespace {

void write_selection(const PipelineConfig& cfg, const IndexPoint& p, const SelectionResult& s) {
  write_json(point_dir(cfg.output_dir, p) / "selection.json",
             {{"point", point_json(p)}, {"selection", to_json(s)}});
}

SelectionResult read_selection(const PipelineConfig& cfg, const IndexPoint& p) {
  return selection_from_json(read_json(point_dir(cfg.output_dir, p) / "selection.json").at("selection"));
}

void write_models(const PipelineConfig& cfg, const IndexPoint& p,
                  const std::map<LearnerKind, FittedModel>& models) {
  auto list = nlohmann::json::array();
  for (const auto& [kind, model] : models) list.push_back(to_json(model));
  write_json(point_dir(cfg.output_dir, p) / "models.json",
             {{"point", point_json(p)}, {"models", std::move(list)}});
}

std::map<LearnerKind, FittedModel> read_models(const PipelineConfig& cfg, const IndexPoint& p) {
  const auto doc = read_json(point_dir(cfg.output_dir, p) / "models.json");
  std::map<LearnerKind, FittedModel> out;
  for (const auto& m : doc.at("models")) {
    auto model = model_from_json(m);
    out.emplace(model.kind(), std::move(model));
  }
  return out;
}

void write_evaluation(const PipelineConfig& cfg, const IndexPoint& p,
                      const std::vector<EvalResult>& rows) {
  auto list = nlohmann::json::array();
  for (const auto& r : rows) list.push_back(to_json(r));
  write_json(point_dir(cfg.output_dir, p) / "evaluation.json",
             {{"point", point_json(p)}, {"rows", std::move(list)}});
}

std::vector<EvalResult> read_evaluation(const PipelineConfig& cfg, const IndexPoint& p) {
  const auto doc = read_json(point_dir(cfg.output_dir, p) / "evaluation.json");
  std::vector<EvalResult> out;
  for (const auto& r : doc.at("rows")) out.push_back(eval_result_from_json(r));
  return out;
}

void write_reports(const PipelineConfig& cfg, const EvaluationReport& report,
                   const std::vector<std::pair<IndexPoint, SelectionResult>>& selections,
                   const std::vector<ReportFormat>& formats) {
  std::vector<ReportFormat> chosen = formats;
  if (chosen.empty()) chosen = {ReportFormat::kText, ReportFormat::kCsv, ReportFormat::kJson};
  for (ReportFormat f : chosen) {
    write_text(cfg.output_dir / ("report." + std::string(format_extension(f))),
               render_report(report, f));
  }
  write_text(cfg.output_dir / "top_features.csv", render_top_features_csv(selections));
  write_text(cfg.output_dir / "feature_frequency.csv", render_feature_frequency_csv(selections));
}

// Runs `body` per point, honouring continue_on_error.
template <typename Body>
std::vector<std::string> for_each_point(const PipelineConfig& cfg, const std::vector<Dataset>& data,
                                        Body body) {
  std::vector<std::string> errors(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      require_rows(cfg, data[i]);
      body(data[i]);
    } catch (const Error& e) {
      if (!cfg.continue_on_error) throw with_point(data[i].point, e);
      errors[i] = e.what();
      write_text(point_dir(cfg.output_dir, data[i].point) / "error.txt", errors[i] + "\n");
    }
  }
  return errors;
}

}  // namespace

std::string render_top_features_csv(
    const std::vector<std::pair<IndexPoint, SelectionResult>>& selections) {
  std::ostringstream out;
  out << "lon,lat,elev,top_features\n";
  for (const auto& [point, sel] : selections) {
    out << format_double(point.lon) << ',' << format_double(point.lat) << ','
        << format_double(point.elev) << ',';
    for (std::size_t i = 0; i < sel.top_k.size(); ++i) {
      out << (i ? ";" : "") << feature_name(sel.top_k[i]);
    }
    out << '\n';
  }
  return out.str();
}

std::string render_feature_frequency_csv(
    const std::vector<std::pair<IndexPoint, SelectionResult>>& selections) {
  std::map<std::size_t, std::size_t> freq;
  for (const auto& [point, sel] : selections) {
    for (std::size_t f : sel.top_k) ++freq[f];
  }
  std::vector<std::pair<std::size_t, std::size_t>> rows(freq.begin(), freq.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::ostringstream out;
  out << "feature,frequency\n";
  for (const auto& [f, n] : rows) out << feature_name(f) << ',' << n << '\n';
  return out.str();
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto data = load_points(cfg);
  const bool write = !cfg.output_dir.empty();

  std::optional<SelectionResult> pooled;
  if (cfg.pooled) pooled = select_pooled(data, cfg);

  PipelineResult result;
  std::vector<EvalResult> all_rows;
  std::vector<std::pair<IndexPoint, SelectionResult>> selections;
  for (const auto& d : data) {
    PointOutcome outcome;
    outcome.point = d.point;
    try {
      require_rows(cfg, d);
      outcome.selection = pooled ? *pooled : select_for_point(d, cfg);
      if (write) write_selection(cfg, d.point, *outcome.selection);
      const auto models = train_point(d, *outcome.selection, cfg);
      if (write) write_models(cfg, d.point, models);
      outcome.evaluations = evaluate_point(d, models, cfg);
      if (write) write_evaluation(cfg, d.point, outcome.evaluations);
      selections.emplace_back(d.point, *outcome.selection);
      all_rows.insert(all_rows.end(), outcome.evaluations.begin(), outcome.evaluations.end());
    } catch (const Error& e) {
      if (!cfg.continue_on_error) throw with_point(d.point, e);
      outcome.error = e.what();
      if (write) write_text(point_dir(cfg.output_dir, d.point) / "error.txt", outcome.error + "\n");
    }
    result.points.push_back(std::move(outcome));
  }
  if (all_rows.empty()) throw Error(ErrorCode::kEmptyReport, "every index point failed");
  result.report = EvaluationReport(std::move(all_rows));
  if (write) write_reports(cfg, result.report, selections, {});
  return result;
}

void stage_select(const PipelineConfig& cfg) {
  cfg.validate();
  const auto data = load_points(cfg);
  std::optional<SelectionResult> pooled;
  if (cfg.pooled) pooled = select_pooled(data, cfg);
  for_each_point(cfg, data, [&](const Dataset& d) {
    write_selection(cfg, d.point, pooled ? *pooled : select_for_point(d, cfg));
  });
}

void stage_train(const PipelineConfig& cfg) {
  cfg.validate();
  const auto data = load_points(cfg);
  for_each_point(cfg, data, [&](const Dataset& d) {
    write_models(cfg, d.point, train_point(d, read_selection(cfg, d.point), cfg));
  });
}

void stage_evaluate(const PipelineConfig& cfg) {
  cfg.validate();
  const auto data = load_points(cfg);
  for_each_point(cfg, data, [&](const Dataset& d) {
    write_evaluation(cfg, d.point, evaluate_point(d, read_models(cfg, d.point), cfg));
  });
}

void stage_report(const PipelineConfig& cfg, const std::vector<ReportFormat>& formats) {
  std::vector<IndexPoint> points = cfg.index_points;
  if (points.empty()) {
    for (const auto& d : load_points(cfg)) points.push_back(d.point);
  }
  std::vector<EvalResult> rows;
  std::vector<std::pair<IndexPoint, SelectionResult>> selections;
  for (const auto& p : points) {
    if (std::filesystem::exists(point_dir(cfg.output_dir, p) / "error.txt") &&
        !std::filesystem::exists(point_dir(cfg.output_dir, p) / "evaluation.json")) {
      continue;
    }
    auto r = read_evaluation(cfg, p);
    rows.insert(rows.end(), r.begin(), r.end());
    selections.emplace_back(p, read_selection(cfg, p));
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptyReport, "no evaluations found");
  write_reports(cfg, EvaluationReport(std::move(rows)), selections, formats);
}

}  // namespace hydrocast
