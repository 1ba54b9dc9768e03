#pragma once

// Squared-error CART regression trees. Used as the weak learner of the
// boosting selector and as the base tree of the random forest.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hydrocast/matrix.hpp"
#include "json.hpp"

namespace hydrocast {

struct TreeConfig {
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
  // Columns the tree may split on; all columns when unset.
  std::optional<std::vector<std::size_t>> feature_subset;
  // Per-node random subset size drawn from the candidates (random forests).
  // Unset or >= the candidate count means every candidate is evaluated.
  std::optional<std::size_t> max_features;
  std::uint64_t seed = 0;
};

struct TreeNode {
  // Internal nodes: feature >= 0, children are indices into the node list.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Mean training target of the samples routed here (kept for internal nodes
  // as well, which makes the structure easy to audit).
  double value = 0.0;
  std::size_t n = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features);

  static RegressionTree leaf(double value, std::size_t n_features, std::size_t n = 0) {
    return RegressionTree({TreeNode{.value = value, .n = n}}, n_features);
  }

  // x goes left when x[feature] <= threshold.
  double predict(std::span<const double> x) const;

  // Distinct split features, ascending.
  std::vector<std::size_t> features_used() const;
  // One entry per internal node, in node order.
  std::vector<std::size_t> split_features() const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  int depth() const;
  std::size_t leaf_count() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

// Greedy top-down growth. At each node every candidate feature is scanned at
// the midpoints between consecutive distinct values and the split with the
// lowest children SSE wins; ties go to the lower feature index, then the lower
// threshold. Growth stops at max_depth, when no split leaves min_samples_leaf
// on both sides, or when the node targets are constant.
RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeConfig& cfg);

// Same, on a multiset of row indices (repeats allowed, for bootstrap samples).
RegressionTree fit_tree(const Matrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const TreeConfig& cfg);

inline double predict_tree(const RegressionTree& tree, std::span<const double> x) {
  return tree.predict(x);
}

inline std::vector<std::size_t> features_used(const RegressionTree& tree) {
  return tree.features_used();
}

// {"n_features": F, "nodes": [{"feature", "threshold", "left", "right",
// "value", "n"} | {"value", "n"}, ...]}; node 0 is the root.
nlohmann::json to_json(const RegressionTree& tree);
RegressionTree tree_from_json(const nlohmann::json& doc);

}  // namespace hydrocast
