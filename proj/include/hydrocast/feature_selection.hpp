#pragma once

// Two-phase predictor selection: drop near-colinear columns by cosine
// similarity, then fit staged gradient boosting on the survivors and rank
// features by how many trees split on them.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hydrocast/cart.hpp"
#include "hydrocast/matrix.hpp"
#include "json.hpp"

namespace hydrocast {

// kL1AsPrinted divides by the product of L1 norms; the result is then not
// bounded by 1 and is only provided for comparison runs.
enum class CosineNorm { kL2, kL1AsPrinted };

struct ColinearityConfig {
  double gamma = 0.9;
  CosineNorm norm = CosineNorm::kL2;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         CosineNorm norm = CosineNorm::kL2);

struct DroppedPair {
  std::size_t kept = 0;
  std::size_t dropped = 0;
  double cosine = 0.0;
  friend bool operator==(const DroppedPair&, const DroppedPair&) = default;
};

struct PruneResult {
  std::vector<std::size_t> kept;  // ascending column order
  std::vector<DroppedPair> dropped;
};

// Scans pairs (i, j), i < j, skipping columns already dropped; when
// |cos| >= gamma the later column j is dropped and attributed to i.
PruneResult prune_colinear(const Matrix& x, const ColinearityConfig& cfg = {});

// Same scan restricted to the given columns (indices into x).
PruneResult prune_colinear(const Matrix& x, std::span<const std::size_t> columns,
                           const ColinearityConfig& cfg = {});

struct BoostConfig {
  std::size_t trees_per_stage = 100;
  std::size_t max_stages = 10;
  double rho = 1.0;
  // Stop once (mse_prev - mse) / mse_prev falls below this.
  double stop_tolerance = 1e-4;
  TreeConfig weak_tree = {};
  // Features drawn (without replacement) for each tree; ceil(sqrt(#candidates))
  // when unset.
  std::optional<std::size_t> features_per_tree;
  std::uint64_t seed = 0;
};

struct BoostedModel {
  double base = 0.0;
  double rho = 1.0;
  std::vector<std::vector<RegressionTree>> stages;
  // Entry 0 is the MSE of the constant base model; entry m the MSE after m stages.
  std::vector<double> training_mse_per_stage;
  std::vector<std::size_t> candidate_features;
  std::size_t n_features = 0;

  // F(x) = base + rho * sum over stages of the stage's mean tree output.
  double predict(std::span<const double> x) const;
  std::size_t tree_count() const;
};

// Each stage fits trees_per_stage trees to the current residuals, each on its
// own random feature subset, and adds rho times their average to the model.
// Tree seeds are derived from (seed, stage, tree) only.
BoostedModel fit_boosted(const Matrix& x, std::span<const double> y, const BoostConfig& cfg,
                         std::span<const std::size_t> candidate_features = {});

enum class OccurrenceMode {
  kPerTree,  // a feature counts once per tree that splits on it
  kPerNode,  // a feature counts once per internal node
};

// Count per candidate feature; unused candidates are present with count 0.
std::map<std::size_t, std::size_t> rank_features(const BoostedModel& model,
                                                 OccurrenceMode mode = OccurrenceMode::kPerTree);

// Count descending, ties by ascending index; zero counts excluded.
std::vector<std::size_t> select_top_k(const std::map<std::size_t, std::size_t>& occurrence,
                                      std::size_t kappa);

struct SelectionConfig {
  ColinearityConfig colinearity;
  BoostConfig boost;
  std::size_t kappa = 10;
  OccurrenceMode occurrence_mode = OccurrenceMode::kPerTree;
};

struct SelectionResult {
  std::vector<std::size_t> kept_after_prune;
  std::vector<DroppedPair> dropped_pairs;
  std::map<std::size_t, std::size_t> occurrence;
  std::vector<std::size_t> top_k;
  std::size_t kappa = 10;
  std::vector<double> training_mse_per_stage;
  std::size_t trees_fitted = 0;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

// prune_colinear -> fit_boosted on the kept columns -> rank_features ->
// select_top_k. Columns of x are catalog feature indices.
SelectionResult select_features(const Matrix& x, std::span<const double> y,
                                const SelectionConfig& cfg);

// Feature names are used as keys; see README for the layout.
nlohmann::json to_json(const SelectionResult& result);
SelectionResult selection_from_json(const nlohmann::json& doc);

}  // namespace hydrocast
