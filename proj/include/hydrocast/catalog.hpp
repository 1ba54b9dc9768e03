#pragma once

// The fixed predictor schema: seven reanalysis variables sampled at up to
// seventeen pressure levels, 85 columns in total. Columns are addressed by a
// zero-based feature index (catalog_index - 1) everywhere else in the library.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace hydrocast {

inline constexpr std::size_t kNumPressureLevels = 17;
inline constexpr std::size_t kNumFeatures = 85;

inline constexpr std::array<int, kNumPressureLevels> kLevelMillibars = {
    1000, 925, 850, 700, 600, 500, 400, 300, 250, 200, 150, 100, 70, 50, 30, 20, 10};

class PressureLevel {
 public:
  // index is 1-based: l1 = 1000 mb ... l17 = 10 mb.
  static PressureLevel from_index(int index);
  static PressureLevel from_millibars(int millibars);

  int index() const noexcept { return index_; }
  int millibars() const noexcept { return kLevelMillibars[index_ - 1]; }

  friend bool operator==(PressureLevel, PressureLevel) = default;

 private:
  explicit PressureLevel(int index) : index_(index) {}
  int index_;
};

enum class Variable { kAir, kHgt, kRhum, kShum, kSlp, kUwnd, kVwnd };

inline constexpr std::array<Variable, 7> kVariables = {
    Variable::kAir,  Variable::kHgt,  Variable::kRhum, Variable::kShum,
    Variable::kSlp,  Variable::kUwnd, Variable::kVwnd};

std::string_view variable_name(Variable v);
int variable_level_count(Variable v);

class FeatureId {
 public:
  FeatureId(Variable variable, PressureLevel level);
  static FeatureId from_catalog_index(int catalog_index);
  static FeatureId from_feature_index(std::size_t feature_index) {
    return from_catalog_index(static_cast<int>(feature_index) + 1);
  }

  Variable variable() const noexcept { return variable_; }
  PressureLevel level() const noexcept { return level_; }
  int catalog_index() const noexcept { return catalog_index_; }
  std::size_t feature_index() const noexcept {
    return static_cast<std::size_t>(catalog_index_ - 1);
  }

  friend bool operator==(const FeatureId&, const FeatureId&) = default;

 private:
  Variable variable_;
  PressureLevel level_;
  int catalog_index_;
};

// "air_l01" ... "vwnd_l17".
std::string feature_name(const FeatureId& id);
std::string feature_name(std::size_t feature_index);

// Throws Error(kUnknownName) for names outside the catalog, e.g. "rhum_l09".
FeatureId parse_feature_name(std::string_view name);

// All 85 names in catalog order.
const std::array<std::string, kNumFeatures>& feature_names();

}  // namespace hydrocast
