#pragma once

// The five regressors compared per index point, behind one fit/predict
// contract. Every model is fitted on the top-kappa columns only and keeps the
// standardization statistics of its training rows.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "hydrocast/cart.hpp"
#include "hydrocast/matrix.hpp"
#include "json.hpp"

namespace hydrocast {

// Declaration order is the report order.
enum class LearnerKind { kRF, kKNN, kSVR, kLR, kMLP };

inline constexpr std::array<LearnerKind, 5> kAllLearners = {
    LearnerKind::kRF, LearnerKind::kKNN, LearnerKind::kSVR, LearnerKind::kLR, LearnerKind::kMLP};

std::string_view kind_name(LearnerKind kind);
LearnerKind parse_kind(std::string_view name);

struct LinearHyper {
  bool ridge_fallback = true;
  double ridge_lambda = 1e-8;
};

struct KnnHyper {
  std::size_t k = 3;
};

struct ForestHyper {
  std::size_t n_trees = 100;
  bool bootstrap = true;
  // Per-node candidate count; ceil(sqrt(#features)) when unset.
  std::optional<std::size_t> max_features;
  int max_depth = 64;
  std::size_t min_samples_leaf = 2;
};

// Linear epsilon-insensitive regression,
//   min 1/2 |w|^2 + C * sum_i max(0, |y_i - w.z_i - b| - epsilon),
// solved in the dual by coordinate descent over a seeded sample order. The
// bias is handled as an extra constant input, after centring y.
struct SvrHyper {
  double c = 1.0;
  double epsilon = 0.1;  // target units
  std::size_t max_epochs = 1000;
  double tolerance = 1e-4;  // largest KKT violation at convergence
};

struct MlpHyper {
  std::vector<std::size_t> hidden_sizes = {32};
  std::size_t epochs = 500;  // full-batch steps
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kLR;
  LinearHyper linear;
  KnnHyper knn;
  ForestHyper forest;
  SvrHyper svr;
  MlpHyper mlp;
  std::uint64_t seed = 0;

  void validate() const;
};

// One spec per kind, in report order, with seeds derived from `seed`.
std::vector<LearnerSpec> default_learner_specs(std::uint64_t seed);

// Per-column z-score. Columns with zero spread keep scale 1. An empty
// Standardization is the identity.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const Matrix& x);
  static Standardization identity(std::size_t n);
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& x) const;
};

struct LinearParams {
  std::vector<double> weights;  // standardized space
  double bias = 0.0;
};

struct KnnParams {
  std::size_t k = 3;
  Matrix points;  // standardized training rows
  std::vector<double> targets;
};

struct ForestParams {
  std::vector<RegressionTree> trees;
};

struct SvrParams {
  std::vector<double> weights;  // standardized space
  double bias = 0.0;
};

struct MlpParams {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., 1
  std::vector<double> params;            // see mlp::parameter_count
  double target_mean = 0.0;
  double target_scale = 1.0;
};

using ModelParams = std::variant<LinearParams, KnnParams, ForestParams, SvrParams, MlpParams>;

class FittedModel {
 public:
  FittedModel(LearnerSpec spec, ModelParams params, Standardization standardization,
              std::vector<std::size_t> feature_indices);

  // Direct constructors for models with known parameters.
  static FittedModel linear(std::vector<double> weights, double bias,
                            Standardization standardization = {},
                            std::vector<std::size_t> feature_indices = {});
  static FittedModel svr(std::vector<double> weights, double bias,
                         Standardization standardization = {},
                         std::vector<std::size_t> feature_indices = {});

  LearnerKind kind() const noexcept { return spec_.kind; }
  const LearnerSpec& spec() const noexcept { return spec_; }
  const ModelParams& params() const noexcept { return params_; }
  const Standardization& standardization() const noexcept { return standardization_; }
  const std::vector<std::size_t>& feature_indices() const noexcept { return feature_indices_; }
  std::size_t input_width() const noexcept { return width_; }

  // x holds the model's features only, in feature_indices order.
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;

  // LR only: coefficients and intercept in the original feature units.
  std::pair<std::vector<double>, double> linear_coefficients() const;

 private:
  LearnerSpec spec_;
  ModelParams params_;
  Standardization standardization_;
  std::vector<std::size_t> feature_indices_;
  std::size_t width_ = 0;
};

// feature_indices labels the columns of x (catalog indices); when empty the
// columns are labelled 0..cols-1.
FittedModel fit(const LearnerSpec& spec, const Matrix& x, std::span<const double> y,
                std::vector<std::size_t> feature_indices = {});

// Errors are rethrown with the failing kind in the message; duplicate kinds
// raise kDuplicateKind.
std::map<LearnerKind, FittedModel> fit_all(std::span<const LearnerSpec> specs, const Matrix& x,
                                           std::span<const double> y,
                                           std::vector<std::size_t> feature_indices = {});

nlohmann::json to_json(const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& doc);

namespace mlp {

std::size_t parameter_count(std::span<const std::size_t> layer_sizes);

// Layer l stores its weights row-major (out x in) followed by its biases.
// Hidden layers use ReLU; the output is linear.
double forward(std::span<const std::size_t> layer_sizes, std::span<const double> params,
               std::span<const double> input);

// Mean of 1/2 (f(x_i) - t_i)^2 over the rows; fills `gradient` (same layout
// as params) when non-null.
double loss_and_gradient(std::span<const std::size_t> layer_sizes, std::span<const double> params,
                         const Matrix& x, std::span<const double> targets,
                         std::vector<double>* gradient);

// He-uniform weights, zero biases.
std::vector<double> initialize(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

}  // namespace mlp

}  // namespace hydrocast
