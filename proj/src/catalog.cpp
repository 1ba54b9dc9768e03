#include "hydrocast/catalog.hpp"

#include <algorithm>
#include <charconv>

#include "hydrocast/error.hpp"

namespace hydrocast {
namespace {

// First catalog index of each variable, in declaration order.
constexpr std::array<int, 7> kFirstIndex = {1, 18, 35, 43, 51, 52, 69};
constexpr std::array<int, 7> kLevelCount = {17, 17, 8, 8, 1, 17, 17};

std::size_t ordinal(Variable v) { return static_cast<std::size_t>(v); }

}  // namespace

PressureLevel PressureLevel::from_index(int index) {
  if (index < 1 || index > static_cast<int>(kNumPressureLevels)) {
    throw Error(ErrorCode::kUnknownName, "pressure level l" + std::to_string(index));
  }
  return PressureLevel(index);
}

PressureLevel PressureLevel::from_millibars(int millibars) {
  auto it = std::find(kLevelMillibars.begin(), kLevelMillibars.end(), millibars);
  if (it == kLevelMillibars.end()) {
    throw Error(ErrorCode::kUnknownName, std::to_string(millibars) + " mb");
  }
  return PressureLevel(static_cast<int>(it - kLevelMillibars.begin()) + 1);
}

std::string_view variable_name(Variable v) {
  static constexpr std::array<std::string_view, 7> kNames = {
      "air", "hgt", "rhum", "shum", "slp", "uwnd", "vwnd"};
  return kNames[ordinal(v)];
}

int variable_level_count(Variable v) { return kLevelCount[ordinal(v)]; }

FeatureId::FeatureId(Variable variable, PressureLevel level)
    : variable_(variable), level_(level) {
  if (level.index() > variable_level_count(variable)) {
    throw Error(ErrorCode::kUnknownName,
                std::string(variable_name(variable)) + " has no level l" +
                    std::to_string(level.index()));
  }
  catalog_index_ = kFirstIndex[ordinal(variable)] + level.index() - 1;
}

FeatureId FeatureId::from_catalog_index(int catalog_index) {
  if (catalog_index < 1 || catalog_index > static_cast<int>(kNumFeatures)) {
    throw Error(ErrorCode::kUnknownName, "catalog index " + std::to_string(catalog_index));
  }
  std::size_t v = kFirstIndex.size() - 1;
  while (kFirstIndex[v] > catalog_index) --v;
  return FeatureId(static_cast<Variable>(v),
                   PressureLevel::from_index(catalog_index - kFirstIndex[v] + 1));
}

std::string feature_name(const FeatureId& id) {
  const int level = id.level().index();
  std::string out(variable_name(id.variable()));
  out += "_l";
  if (level < 10) out += '0';
  out += std::to_string(level);
  return out;
}

std::string feature_name(std::size_t feature_index) {
  return feature_names().at(feature_index);
}

FeatureId parse_feature_name(std::string_view name) {
  const auto sep = name.find("_l");
  const auto unknown = [&] {
    return Error(ErrorCode::kUnknownName, "'" + std::string(name) + "'");
  };
  if (sep == std::string_view::npos) throw unknown();
  const auto var = name.substr(0, sep);
  const auto digits = name.substr(sep + 2);
  if (digits.size() != 2) throw unknown();
  int level = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), level);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) throw unknown();
  for (Variable v : kVariables) {
    if (variable_name(v) == var) {
      if (level < 1 || level > variable_level_count(v)) throw unknown();
      return FeatureId(v, PressureLevel::from_index(level));
    }
  }
  throw unknown();
}

const std::array<std::string, kNumFeatures>& feature_names() {
  static const auto names = [] {
    std::array<std::string, kNumFeatures> out;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      out[i] = feature_name(FeatureId::from_feature_index(i));
    }
    return out;
  }();
  return names;
}

}  // namespace hydrocast
