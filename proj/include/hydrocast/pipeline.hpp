#pragma once

// Per-point orchestration: prune -> boost-select (training rows only) ->
// split -> fit the learners -> evaluate on the held-out rows -> report.
// Each stage also has a file-backed entry point so that the CLI subcommands
// can be chained by hand and reproduce `run` exactly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hydrocast/dataset.hpp"
#include "hydrocast/evaluation.hpp"
#include "hydrocast/feature_selection.hpp"
#include "hydrocast/learners.hpp"

namespace hydrocast {

struct PipelineConfig {
  std::filesystem::path data_path;
  // Empty means every point present in the data file, in file order.
  std::vector<IndexPoint> index_points = reference_points();
  SelectionConfig selection;
  SplitSpec split;
  // Hyperparameters per learner; seeds are always re-derived from `seed`.
  std::vector<LearnerSpec> learners = default_learner_specs(0);
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  // Select on every row, test rows included (literal block-diagram order).
  bool select_on_all = false;
  // One selection over the pooled training rows of all points.
  bool pooled = false;
  bool continue_on_error = false;

  void validate() const;
};

// Sub-seeds depend on the master seed and the point location only.
std::uint64_t point_seed(std::uint64_t seed, const IndexPoint& point);
SelectionConfig selection_config_for(const PipelineConfig& cfg, const IndexPoint& point);
SplitSpec split_spec_for(const PipelineConfig& cfg, const IndexPoint& point);
std::vector<LearnerSpec> learner_specs_for(const PipelineConfig& cfg, const IndexPoint& point);

// Rows that feature selection may look at.
Dataset selection_rows(const Dataset& data, const PipelineConfig& cfg);

SelectionResult select_for_point(const Dataset& data, const PipelineConfig& cfg);
SelectionResult select_pooled(const std::vector<Dataset>& data, const PipelineConfig& cfg);

std::map<LearnerKind, FittedModel> train_point(const Dataset& data,
                                               const SelectionResult& selection,
                                               const PipelineConfig& cfg);

std::vector<EvalResult> evaluate_point(const Dataset& data,
                                       const std::map<LearnerKind, FittedModel>& models,
                                       const PipelineConfig& cfg);

struct PointOutcome {
  IndexPoint point;
  std::optional<SelectionResult> selection;
  std::vector<EvalResult> evaluations;
  std::string error;  // empty on success
};

struct PipelineResult {
  std::vector<PointOutcome> points;
  EvaluationReport report;
};

// Loads cfg.data_path, runs every point and, when cfg.output_dir is set,
// writes all artifacts (see README).
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Datasets for the requested points, in request order.
std::vector<Dataset> load_points(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// File-backed stages. Layout under output_dir:
//   <lon>_<lat>/selection.json, models.json, evaluation.json
//   report.{txt,csv,json}, top_features.csv, feature_frequency.csv

std::filesystem::path point_dir(const std::filesystem::path& output_dir, const IndexPoint& point);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

void stage_select(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
void stage_evaluate(const PipelineConfig& cfg);
// formats empty means all three.
void stage_report(const PipelineConfig& cfg, const std::vector<ReportFormat>& formats);

// Table-shaped summaries of the per-point selections.
std::string render_top_features_csv(
    const std::vector<std::pair<IndexPoint, SelectionResult>>& selections);
std::string render_feature_frequency_csv(
    const std::vector<std::pair<IndexPoint, SelectionResult>>& selections);

}  // namespace hydrocast
