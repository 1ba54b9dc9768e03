#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hydrocast/catalog.hpp"
#include "hydrocast/matrix.hpp"

namespace hydrocast {

struct YearMonth {
  int year = 0;
  int month = 1;  // 1..12

  // Parses "YYYY-MM"; throws Error(kParse).
  static YearMonth parse(std::string_view text);
  std::string to_string() const;
  YearMonth next() const { return month == 12 ? YearMonth{year + 1, 1} : YearMonth{year, month + 1}; }

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

struct IndexPoint {
  double lon = 0.0;
  double lat = 0.0;
  double elev = 0.0;
  std::string id;

  // Coordinates agree within 1e-6 degrees; elevation and label are ignored.
  bool same_location(const IndexPoint& other) const;
  // Directory-safe key, e.g. "27.5_67.5".
  std::string key() const;
};

// The thirteen Indus Basin index points, in report order.
const std::vector<IndexPoint>& reference_points();

struct Sample {
  YearMonth timestamp;
  std::vector<double> features;  // kNumFeatures values, catalog order
  double precip = 0.0;
};

// Monthly samples for one index point, stored column-wise for the learners.
// Immutable after validation; safe to share between threads.
struct Dataset {
  IndexPoint point;
  std::vector<YearMonth> dates;
  Matrix features;  // dates.size() x kNumFeatures
  std::vector<double> precip;

  std::size_t size() const noexcept { return dates.size(); }
  bool empty() const noexcept { return dates.empty(); }
  Sample sample(std::size_t i) const;
  void push_back(const Sample& s);

  // Sorts chronologically and checks the invariants: matching shapes, finite
  // values, nonnegative precipitation, strictly increasing dates.
  void validate_and_sort();

  Dataset select(std::span<const std::size_t> rows) const;
};

enum class SplitMode { kChronological, kSeededRandom };

struct SplitSpec {
  double train_fraction = 0.9;
  SplitMode mode = SplitMode::kChronological;
  std::uint64_t seed = 0;
};

// round-half-up((1 - train_fraction) * n), at least 1.
std::size_t test_count(std::size_t n, double train_fraction);

// Disjoint, order-preserving partition. Chronological mode holds out the
// latest samples. Throws kFractionOutOfRange when either side would be empty.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

// Row indices of the training / test portions produced by split().
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, const SplitSpec& spec);

// CSV I/O. Header: date,lon,lat,elev,<85 feature names>,precip.
std::vector<Dataset> read_csv_all(std::istream& in);
std::vector<Dataset> load_csv_all(const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path, const IndexPoint& point);
void write_csv(std::ostream& out, std::span<const Dataset> datasets);
void save_csv(const std::filesystem::path& path, std::span<const Dataset> datasets);

// Synthetic data with a planted signal. Every feature is i.i.d. N(0, 1); the
// raw signal over the planted features p[0..k) is
//
//   linear: g = sum_j w_j * x[p_j],           w_j = 1 + 0.25 j
//   mixed:  linear + x[p_0] * x[p_1]          (interaction, k >= 2)
//                  + 2 * [x[p_{k-1}] > 0]     (threshold)
//
// then y = g + N(0, noise_sigma) and precip = 10 * (y - min y) so every value
// is nonnegative. The map g -> precip is affine.
enum class SignalShape { kLinear, kMixed };

struct SyntheticSpec {
  std::size_t n_samples = 444;
  std::vector<FeatureId> planted;
  double noise_sigma = 0.0;
  // When set, noise_sigma is a fraction of the sample std of g.
  bool noise_relative_to_signal = false;
  SignalShape shape = SignalShape::kMixed;
  std::uint64_t seed = 0;
  IndexPoint point = {27.5, 67.5, 472.9, "P01"};
  YearMonth start = {1981, 1};
};

struct GroundTruth {
  std::vector<std::size_t> planted;  // feature indices, in the order given
  std::vector<double> linear_weights;
  bool has_interaction = false;
  bool has_threshold = false;
  double signal_std = 0.0;
  double noise_sigma = 0.0;  // absolute, in g units
  double scale = 10.0;
  double offset = 0.0;  // precip = scale * (y - offset)
  std::string description;
};

struct SyntheticData {
  Dataset data;
  GroundTruth truth;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace hydrocast
