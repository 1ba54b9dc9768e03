#include "hydrocast/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "hydrocast/error.hpp"
#include "hydrocast/random.hpp"

namespace hydrocast {

std::string_view kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kRF: return "RF";
    case LearnerKind::kKNN: return "KNN";
    case LearnerKind::kSVR: return "SVR";
    case LearnerKind::kLR: return "LR";
    case LearnerKind::kMLP: return "MLP";
  }
  return "?";
}

LearnerKind parse_kind(std::string_view name) {
  for (LearnerKind kind : kAllLearners) {
    if (kind_name(kind) == name) return kind;
  }
  if (name == "K-NN") return LearnerKind::kKNN;
  throw Error(ErrorCode::kUnknownName, "learner '" + std::string(name) + "'");
}

void LearnerSpec::validate() const {
  const auto invalid = [&](const std::string& what) {
    return Error(ErrorCode::kInvalidConfig, std::string(kind_name(kind)) + ": " + what);
  };
  switch (kind) {
    case LearnerKind::kKNN:
      if (knn.k < 1) throw invalid("k must be >= 1");
      break;
    case LearnerKind::kRF:
      if (forest.n_trees < 1) throw invalid("n_trees must be >= 1");
      if (forest.max_depth < 1 || forest.min_samples_leaf < 1) throw invalid("tree limits");
      if (forest.max_features && *forest.max_features < 1) throw invalid("max_features");
      break;
    case LearnerKind::kSVR:
      if (!(svr.epsilon >= 0.0) || !(svr.c > 0.0)) throw invalid("need epsilon >= 0 and C > 0");
      break;
    case LearnerKind::kMLP:
      if (mlp.hidden_sizes.empty()) throw invalid("hidden_sizes must be nonempty");
      if (std::find(mlp.hidden_sizes.begin(), mlp.hidden_sizes.end(), 0u) !=
          mlp.hidden_sizes.end()) {
        throw invalid("hidden layer of width 0");
      }
      if (!(mlp.learning_rate > 0.0)) throw invalid("learning_rate must be > 0");
      break;
    case LearnerKind::kLR:
      if (!(linear.ridge_lambda > 0.0)) throw invalid("ridge_lambda must be > 0");
      break;
  }
}

std::vector<LearnerSpec> default_learner_specs(std::uint64_t seed) {
  std::vector<LearnerSpec> specs;
  for (LearnerKind kind : kAllLearners) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.seed = derive_seed(seed, 0x6c6561726e6572ULL, static_cast<std::uint64_t>(kind));
    specs.push_back(spec);
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Standardization

Standardization Standardization::fit(const Matrix& x) {
  Standardization s;
  const auto n = static_cast<double>(x.rows());
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 1.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[c] = mean;
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Standardization Standardization::identity(std::size_t n) {
  return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
  if (mean.empty()) return {x.begin(), x.end()};
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
  return out;
}

Matrix Standardization::apply(const Matrix& x) const {
  if (mean.empty()) return x;
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// MLP primitives

namespace mlp {

std::size_t parameter_count(std::span<const std::size_t> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l + 1] * (layer_sizes[l] + 1);
  }
  return n;
}

namespace {

// Activations of every layer for one input; acts[0] is the input.
void forward_all(std::span<const std::size_t> sizes, std::span<const double> params,
                 std::span<const double> input, std::vector<std::vector<double>>& acts) {
  const std::size_t layers = sizes.size() - 1;
  acts.resize(sizes.size());
  acts[0].assign(input.begin(), input.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const double* w = params.data() + offset;
    const double* b = w + out * in;
    auto& next = acts[l + 1];
    next.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * acts[l][i];
      next[o] = (l + 1 < layers) ? std::max(z, 0.0) : z;
    }
    offset += out * (in + 1);
  }
}

void check_shape(std::span<const std::size_t> sizes, std::span<const double> params) {
  if (sizes.size() < 2 || sizes.back() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "mlp needs >= 2 layers and a scalar output");
  }
  if (params.size() != parameter_count(sizes)) {
    throw Error(ErrorCode::kShapeMismatch, "mlp parameter vector has wrong length");
  }
}

}  // namespace

double forward(std::span<const std::size_t> layer_sizes, std::span<const double> params,
               std::span<const double> input) {
  check_shape(layer_sizes, params);
  if (input.size() != layer_sizes.front()) {
    throw Error(ErrorCode::kShapeMismatch, "mlp input width");
  }
  std::vector<std::vector<double>> acts;
  forward_all(layer_sizes, params, input, acts);
  return acts.back()[0];
}

double loss_and_gradient(std::span<const std::size_t> sizes, std::span<const double> params,
                         const Matrix& x, std::span<const double> targets,
                         std::vector<double>* gradient) {
  check_shape(sizes, params);
  if (x.cols() != sizes.front() || x.rows() != targets.size() || x.rows() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "mlp batch shape");
  }
  const std::size_t layers = sizes.size() - 1;
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offsets[l] = off;
    off += sizes[l + 1] * (sizes[l] + 1);
  }
  if (gradient) gradient->assign(params.size(), 0.0);

  const auto n = static_cast<double>(x.rows());
  double loss = 0.0;
  std::vector<std::vector<double>> acts;
  std::vector<double> delta;
  std::vector<double> prev_delta;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    forward_all(sizes, params, x.row(r), acts);
    const double err = acts.back()[0] - targets[r];
    loss += 0.5 * err * err / n;
    if (!gradient) continue;
    delta.assign(1, err / n);
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const double* w = params.data() + offsets[l];
      double* gw = gradient->data() + offsets[l];
      double* gb = gw + out * in;
      for (std::size_t o = 0; o < out; ++o) {
        gb[o] += delta[o];
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * acts[l][i];
      }
      if (l == 0) break;
      // Back through ReLU: the stored activation is max(z, 0), so z > 0 iff a > 0.
      prev_delta.assign(in, 0.0);
      for (std::size_t i = 0; i < in; ++i) {
        if (acts[l][i] <= 0.0) continue;
        double sum = 0.0;
        for (std::size_t o = 0; o < out; ++o) sum += w[o * in + i] * delta[o];
        prev_delta[i] = sum;
      }
      delta.swap(prev_delta);
    }
  }
  return loss;
}

std::vector<double> initialize(std::span<const std::size_t> sizes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> params;
  params.reserve(parameter_count(sizes));
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l]));
    for (std::size_t k = 0; k < sizes[l + 1] * sizes[l]; ++k) {
      params.push_back(rng.uniform(-limit, limit));
    }
    params.insert(params.end(), sizes[l + 1], 0.0);
  }
  return params;
}

}  // namespace mlp

// ---------------------------------------------------------------------------
// FittedModel

FittedModel::FittedModel(LearnerSpec spec, ModelParams params, Standardization standardization,
                         std::vector<std::size_t> feature_indices)
    : spec_(std::move(spec)),
      params_(std::move(params)),
      standardization_(std::move(standardization)),
      feature_indices_(std::move(feature_indices)) {
  width_ = std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams> || std::is_same_v<T, SvrParams>) {
          return p.weights.size();
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          return p.points.cols();
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          return p.trees.empty() ? 0 : p.trees.front().n_features();
        } else {
          return p.layer_sizes.empty() ? 0 : p.layer_sizes.front();
        }
      },
      params_);
  if (feature_indices_.empty()) {
    feature_indices_.resize(width_);
    std::iota(feature_indices_.begin(), feature_indices_.end(), std::size_t{0});
  }
  if (feature_indices_.size() != width_ ||
      (!standardization_.mean.empty() && standardization_.mean.size() != width_)) {
    throw Error(ErrorCode::kShapeMismatch, "model parameters disagree on input width");
  }
}

FittedModel FittedModel::linear(std::vector<double> weights, double bias,
                                Standardization standardization,
                                std::vector<std::size_t> feature_indices) {
  LearnerSpec spec;
  spec.kind = LearnerKind::kLR;
  return FittedModel(spec, LinearParams{std::move(weights), bias}, std::move(standardization),
                     std::move(feature_indices));
}

FittedModel FittedModel::svr(std::vector<double> weights, double bias,
                             Standardization standardization,
                             std::vector<std::size_t> feature_indices) {
  LearnerSpec spec;
  spec.kind = LearnerKind::kSVR;
  return FittedModel(spec, SvrParams{std::move(weights), bias}, std::move(standardization),
                     std::move(feature_indices));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double knn_predict(const KnnParams& p, std::span<const double> z) {
  std::vector<std::pair<double, std::size_t>> dist(p.points.rows());
  for (std::size_t r = 0; r < p.points.rows(); ++r) {
    double d = 0.0;
    const auto row = p.points.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) d += (row[c] - z[c]) * (row[c] - z[c]);
    dist[r] = {d, r};
  }
  const std::size_t k = std::min(p.k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += p.targets[dist[i].second];
  return sum / static_cast<double>(k);
}

}  // namespace

double FittedModel::predict(std::span<const double> x) const {
  if (x.size() != width_) {
    throw Error(ErrorCode::kShapeMismatch, std::string(kind_name(kind())) + " expects " +
                                               std::to_string(width_) + " features, got " +
                                               std::to_string(x.size()));
  }
  const auto z = standardization_.apply(x);
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams> || std::is_same_v<T, SvrParams>) {
          return dot(p.weights, z) + p.bias;
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          return knn_predict(p, z);
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          double sum = 0.0;
          for (const auto& tree : p.trees) sum += tree.predict(z);
          return sum / static_cast<double>(p.trees.size());
        } else {
          return p.target_mean + p.target_scale * mlp::forward(p.layer_sizes, p.params, z);
        }
      },
      params_);
}

std::vector<double> FittedModel::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.row(r));
  return out;
}

std::pair<std::vector<double>, double> FittedModel::linear_coefficients() const {
  const auto* p = std::get_if<LinearParams>(&params_);
  if (!p) throw Error(ErrorCode::kInvalidConfig, "linear_coefficients on a non-LR model");
  if (standardization_.mean.empty()) return {p->weights, p->bias};
  std::vector<double> coef(p->weights.size());
  double intercept = p->bias;
  for (std::size_t j = 0; j < coef.size(); ++j) {
    coef[j] = p->weights[j] / standardization_.scale[j];
    intercept -= coef[j] * standardization_.mean[j];
  }
  return {coef, intercept};
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

LinearParams fit_linear(const LinearHyper& hyper, const Matrix& z, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(z.rows());
  const auto p = static_cast<Eigen::Index>(z.cols());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> zm(
      z.data().data(), n, p);
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  Eigen::VectorXd yc(n);
  for (Eigen::Index i = 0; i < n; ++i) yc[i] = y[static_cast<std::size_t>(i)] - y_mean;

  // Standardized columns are centred, so the intercept decouples as mean(y).
  Eigen::MatrixXd gram = zm.transpose() * zm;
  const Eigen::VectorXd rhs = zm.transpose() * yc;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  // rcond() skips zero pivots, so look at the pivots directly.
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                        pivots.minCoeff() <= 1e-12 * pivots.maxCoeff();
  if (singular) {
    if (!hyper.ridge_fallback) throw Error(ErrorCode::kSingularSystem, "normal equations");
    gram.diagonal().array() += hyper.ridge_lambda;
    ldlt.compute(gram);
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);
  LinearParams out;
  out.weights.assign(w.data(), w.data() + w.size());
  out.bias = y_mean;
  for (double v : out.weights) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kSingularSystem, "non-finite solution");
  }
  return out;
}

ForestParams fit_forest(const ForestHyper& hyper, std::uint64_t seed, const Matrix& x,
                        std::span<const double> y) {
  const std::size_t n = x.rows();
  TreeConfig cfg;
  cfg.max_depth = hyper.max_depth;
  cfg.min_samples_leaf = hyper.min_samples_leaf;
  cfg.max_features = hyper.max_features.value_or(
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols())))));
  ForestParams out;
  out.trees.reserve(hyper.n_trees);
  std::vector<std::size_t> rows(n);
  for (std::size_t t = 0; t < hyper.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(seed, t);
    Rng rng(derive_seed(tree_seed, 0x626f6f74ULL));
    if (hyper.bootstrap) {
      for (auto& r : rows) r = rng.index(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    cfg.seed = tree_seed;
    out.trees.push_back(fit_tree(x, y, rows, cfg));
  }
  return out;
}

SvrParams fit_svr(const SvrHyper& hyper, std::uint64_t seed, const Matrix& z,
                  std::span<const double> y) {
  const std::size_t n = z.rows();
  const std::size_t p = z.cols();
  const double offset = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  // w has p entries plus the bias weight on a constant input of 1.
  std::vector<double> w(p + 1, 0.0);
  std::vector<double> beta(n, 0.0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = dot(z.row(i), z.row(i)) + 1.0;
  const auto margin = [&](std::size_t i) {
    return dot(std::span<const double>(w).first(p), z.row(i)) + w[p];
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  const double c = hyper.c;
  for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double max_violation = 0.0;
    for (std::size_t i : order) {
      const double g = margin(i) - (y[i] - offset);
      const double gp = g + hyper.epsilon;
      const double gn = g - hyper.epsilon;
      double violation = 0.0;
      if (beta[i] == 0.0) {
        violation = gp < 0.0 ? -gp : (gn > 0.0 ? gn : 0.0);
      } else if (beta[i] >= c) {
        violation = gp > 0.0 ? gp : 0.0;
      } else if (beta[i] <= -c) {
        violation = gn < 0.0 ? -gn : 0.0;
      } else {
        violation = beta[i] > 0.0 ? std::abs(gp) : std::abs(gn);
      }
      max_violation = std::max(max_violation, violation);

      const double h = diag[i];
      double d;
      if (gp < h * beta[i]) {
        d = -gp / h;
      } else if (gn > h * beta[i]) {
        d = -gn / h;
      } else {
        d = -beta[i];
      }
      const double old = beta[i];
      beta[i] = std::clamp(old + d, -c, c);
      d = beta[i] - old;
      if (d == 0.0) continue;
      const auto row = z.row(i);
      for (std::size_t j = 0; j < p; ++j) w[j] += d * row[j];
      w[p] += d;
    }
    if (!std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonConvergence, "SVR weights diverged");
    }
    if (max_violation <= hyper.tolerance) break;
  }
  SvrParams out;
  out.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
  out.bias = offset + w[p];
  return out;
}

MlpParams fit_mlp(const MlpHyper& hyper, std::uint64_t seed, const Matrix& z,
                  std::span<const double> y) {
  MlpParams out;
  out.layer_sizes.push_back(z.cols());
  out.layer_sizes.insert(out.layer_sizes.end(), hyper.hidden_sizes.begin(),
                         hyper.hidden_sizes.end());
  out.layer_sizes.push_back(1);

  // The network regresses the z-scored target; predict() undoes the scaling.
  const auto n = static_cast<double>(y.size());
  out.target_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - out.target_mean) * (v - out.target_mean);
  const double sd = std::sqrt(ss / n);
  // A constant target leaves scale 0, so predictions are exactly the mean.
  out.target_scale = sd;
  std::vector<double> t(y.size(), 0.0);
  if (sd > 0.0) {
    for (std::size_t i = 0; i < y.size(); ++i) t[i] = (y[i] - out.target_mean) / sd;
  }

  out.params = mlp::initialize(out.layer_sizes, seed);
  std::vector<double> m(out.params.size(), 0.0);
  std::vector<double> v(out.params.size(), 0.0);
  std::vector<double> grad;
  double b1t = 1.0;
  double b2t = 1.0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double loss = mlp::loss_and_gradient(out.layer_sizes, out.params, z, t, &grad);
    if (!std::isfinite(loss)) throw Error(ErrorCode::kNonConvergence, "MLP loss is not finite");
    b1t *= hyper.beta1;
    b2t *= hyper.beta2;
    for (std::size_t k = 0; k < out.params.size(); ++k) {
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * grad[k];
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * grad[k] * grad[k];
      const double m_hat = m[k] / (1.0 - b1t);
      const double v_hat = v[k] / (1.0 - b2t);
      out.params[k] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.adam_epsilon);
    }
  }
  return out;
}

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Matrix& x, std::span<const double> y,
                std::vector<std::size_t> feature_indices) {
  spec.validate();
  if (x.rows() < 2) throw Error(ErrorCode::kEmptyInput, "need >= 2 training samples");
  if (x.cols() < 1) throw Error(ErrorCode::kEmptyInput, "need >= 1 feature");
  if (x.rows() != y.size()) throw Error(ErrorCode::kShapeMismatch, "rows vs targets");
  if (!feature_indices.empty() && feature_indices.size() != x.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "feature_indices vs columns");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "training features");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "training targets");
  }

  switch (spec.kind) {
    case LearnerKind::kRF:
      return FittedModel(spec, fit_forest(spec.forest, spec.seed, x, y), {},
                         std::move(feature_indices));
    case LearnerKind::kLR: {
      auto st = Standardization::fit(x);
      return FittedModel(spec, fit_linear(spec.linear, st.apply(x), y), st,
                         std::move(feature_indices));
    }
    case LearnerKind::kKNN: {
      auto st = Standardization::fit(x);
      KnnParams p{spec.knn.k, st.apply(x), {y.begin(), y.end()}};
      return FittedModel(spec, std::move(p), st, std::move(feature_indices));
    }
    case LearnerKind::kSVR: {
      auto st = Standardization::fit(x);
      return FittedModel(spec, fit_svr(spec.svr, spec.seed, st.apply(x), y), st,
                         std::move(feature_indices));
    }
    case LearnerKind::kMLP: {
      auto st = Standardization::fit(x);
      return FittedModel(spec, fit_mlp(spec.mlp, spec.seed, st.apply(x), y), st,
                         std::move(feature_indices));
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown learner kind");
}

std::map<LearnerKind, FittedModel> fit_all(std::span<const LearnerSpec> specs, const Matrix& x,
                                           std::span<const double> y,
                                           std::vector<std::size_t> feature_indices) {
  std::map<LearnerKind, FittedModel> out;
  for (const auto& spec : specs) {
    if (out.contains(spec.kind)) {
      throw Error(ErrorCode::kDuplicateKind, std::string(kind_name(spec.kind)));
    }
    try {
      out.emplace(spec.kind, fit(spec, x, y, feature_indices));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(kind_name(spec.kind)) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const LearnerSpec& spec) {
  nlohmann::json hyper;
  switch (spec.kind) {
    case LearnerKind::kLR:
      hyper = {{"ridge_fallback", spec.linear.ridge_fallback},
               {"ridge_lambda", spec.linear.ridge_lambda}};
      break;
    case LearnerKind::kKNN:
      hyper = {{"k", spec.knn.k}};
      break;
    case LearnerKind::kRF:
      hyper = {{"n_trees", spec.forest.n_trees},
               {"bootstrap", spec.forest.bootstrap},
               {"max_depth", spec.forest.max_depth},
               {"min_samples_leaf", spec.forest.min_samples_leaf}};
      hyper["max_features"] = spec.forest.max_features ? nlohmann::json(*spec.forest.max_features)
                                                       : nlohmann::json(nullptr);
      break;
    case LearnerKind::kSVR:
      hyper = {{"c", spec.svr.c},
               {"epsilon", spec.svr.epsilon},
               {"max_epochs", spec.svr.max_epochs},
               {"tolerance", spec.svr.tolerance}};
      break;
    case LearnerKind::kMLP:
      hyper = {{"hidden_sizes", spec.mlp.hidden_sizes},
               {"epochs", spec.mlp.epochs},
               {"learning_rate", spec.mlp.learning_rate},
               {"beta1", spec.mlp.beta1},
               {"beta2", spec.mlp.beta2},
               {"adam_epsilon", spec.mlp.adam_epsilon}};
      break;
  }
  return {{"kind", kind_name(spec.kind)}, {"seed", spec.seed}, {"hyper", hyper}};
}

LearnerSpec learner_spec_from_json(const nlohmann::json& doc) {
  LearnerSpec spec;
  spec.kind = parse_kind(doc.at("kind").get<std::string>());
  spec.seed = doc.at("seed").get<std::uint64_t>();
  const auto& h = doc.at("hyper");
  switch (spec.kind) {
    case LearnerKind::kLR:
      spec.linear.ridge_fallback = h.at("ridge_fallback").get<bool>();
      spec.linear.ridge_lambda = h.at("ridge_lambda").get<double>();
      break;
    case LearnerKind::kKNN:
      spec.knn.k = h.at("k").get<std::size_t>();
      break;
    case LearnerKind::kRF:
      spec.forest.n_trees = h.at("n_trees").get<std::size_t>();
      spec.forest.bootstrap = h.at("bootstrap").get<bool>();
      spec.forest.max_depth = h.at("max_depth").get<int>();
      spec.forest.min_samples_leaf = h.at("min_samples_leaf").get<std::size_t>();
      if (!h.at("max_features").is_null()) {
        spec.forest.max_features = h.at("max_features").get<std::size_t>();
      }
      break;
    case LearnerKind::kSVR:
      spec.svr.c = h.at("c").get<double>();
      spec.svr.epsilon = h.at("epsilon").get<double>();
      spec.svr.max_epochs = h.at("max_epochs").get<std::size_t>();
      spec.svr.tolerance = h.at("tolerance").get<double>();
      break;
    case LearnerKind::kMLP:
      spec.mlp.hidden_sizes = h.at("hidden_sizes").get<std::vector<std::size_t>>();
      spec.mlp.epochs = h.at("epochs").get<std::size_t>();
      spec.mlp.learning_rate = h.at("learning_rate").get<double>();
      spec.mlp.beta1 = h.at("beta1").get<double>();
      spec.mlp.beta2 = h.at("beta2").get<double>();
      spec.mlp.adam_epsilon = h.at("adam_epsilon").get<double>();
      break;
  }
  return spec;
}

nlohmann::json to_json(const FittedModel& model) {
  nlohmann::json doc = to_json(model.spec());
  doc["feature_indices"] = model.feature_indices();
  doc["standardization"] = {{"mean", model.standardization().mean},
                            {"scale", model.standardization().scale}};
  nlohmann::json params;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams> || std::is_same_v<T, SvrParams>) {
          params = {{"weights", p.weights}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          params = {{"k", p.k},
                    {"rows", p.points.rows()},
                    {"cols", p.points.cols()},
                    {"points", p.points.data()},
                    {"targets", p.targets}};
        } else if constexpr (std::is_same_v<T, ForestParams>) {
          auto trees = nlohmann::json::array();
          for (const auto& t : p.trees) trees.push_back(to_json(t));
          params = {{"trees", std::move(trees)}};
        } else {
          params = {{"layer_sizes", p.layer_sizes},
                    {"params", p.params},
                    {"target_mean", p.target_mean},
                    {"target_scale", p.target_scale}};
        }
      },
      model.params());
  doc["params"] = std::move(params);
  return doc;
}

FittedModel model_from_json(const nlohmann::json& doc) {
  try {
    const LearnerSpec spec = learner_spec_from_json(doc);
    Standardization st;
    st.mean = doc.at("standardization").at("mean").get<std::vector<double>>();
    st.scale = doc.at("standardization").at("scale").get<std::vector<double>>();
    auto features = doc.at("feature_indices").get<std::vector<std::size_t>>();
    const auto& p = doc.at("params");
    ModelParams params;
    switch (spec.kind) {
      case LearnerKind::kLR:
        params = LinearParams{p.at("weights").get<std::vector<double>>(),
                              p.at("bias").get<double>()};
        break;
      case LearnerKind::kSVR:
        params = SvrParams{p.at("weights").get<std::vector<double>>(), p.at("bias").get<double>()};
        break;
      case LearnerKind::kKNN: {
        KnnParams knn;
        knn.k = p.at("k").get<std::size_t>();
        const auto rows = p.at("rows").get<std::size_t>();
        const auto cols = p.at("cols").get<std::size_t>();
        const auto values = p.at("points").get<std::vector<double>>();
        if (values.size() != rows * cols) throw Error(ErrorCode::kParse, "knn points shape");
        knn.points = Matrix(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                      knn.points.row(r).begin());
        }
        knn.targets = p.at("targets").get<std::vector<double>>();
        params = std::move(knn);
        break;
      }
      case LearnerKind::kRF: {
        ForestParams forest;
        for (const auto& t : p.at("trees")) forest.trees.push_back(tree_from_json(t));
        params = std::move(forest);
        break;
      }
      case LearnerKind::kMLP:
        params = MlpParams{p.at("layer_sizes").get<std::vector<std::size_t>>(),
                           p.at("params").get<std::vector<double>>(),
                           p.at("target_mean").get<double>(), p.at("target_scale").get<double>()};
        break;
    }
    return FittedModel(spec, std::move(params), std::move(st), std::move(features));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model json: ") + e.what());
  }
}

}  // namespace hydrocast
