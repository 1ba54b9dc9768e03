#include "hydrocast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "hydrocast/error.hpp"
#include "hydrocast/random.hpp"
#include "hydrocast/text.hpp"

namespace hydrocast {

YearMonth YearMonth::parse(std::string_view text) {
  text = trim(text);
  const auto bad = [&] { return Error(ErrorCode::kParse, "bad date '" + std::string(text) + "'"); };
  if (text.size() != 7 || text[4] != '-') throw bad();
  YearMonth ym;
  for (std::size_t i : {0, 1, 2, 3, 5, 6}) {
    if (text[i] < '0' || text[i] > '9') throw bad();
  }
  ym.year = std::stoi(std::string(text.substr(0, 4)));
  ym.month = std::stoi(std::string(text.substr(5, 2)));
  if (ym.month < 1 || ym.month > 12) throw bad();
  return ym;
}

std::string YearMonth::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

bool IndexPoint::same_location(const IndexPoint& other) const {
  return std::abs(lon - other.lon) < 1e-6 && std::abs(lat - other.lat) < 1e-6;
}

std::string IndexPoint::key() const { return format_double(lon) + "_" + format_double(lat); }

const std::vector<IndexPoint>& reference_points() {
  static const std::vector<IndexPoint> points = {
      {27.5, 67.5, 472.9, "P01"},  {30.0, 67.5, 1232.5, "P02"}, {30.0, 70.0, 721.5, "P03"},
      {30.0, 72.5, 148.2, "P04"},  {32.5, 70.0, 1203.0, "P05"}, {32.5, 72.5, 326.4, "P06"},
      {32.5, 75.0, 967.7, "P07"},  {32.5, 77.5, 4044.4, "P08"}, {32.5, 80.0, 4882.1, "P09"},
      {35.0, 70.0, 2409.8, "P10"}, {35.0, 72.5, 2256.2, "P11"}, {35.0, 75.0, 3590.8, "P12"},
      {35.0, 77.5, 4892.9, "P13"},
  };
  return points;
}

// ---------------------------------------------------------------------------
// Dataset

Sample Dataset::sample(std::size_t i) const {
  auto row = features.row(i);
  return {dates.at(i), std::vector<double>(row.begin(), row.end()), precip.at(i)};
}

void Dataset::push_back(const Sample& s) {
  if (s.features.size() != kNumFeatures) {
    throw Error(ErrorCode::kShapeMismatch,
                "sample has " + std::to_string(s.features.size()) + " features");
  }
  if (features.empty() && features.cols() == 0) features = Matrix(0, kNumFeatures);
  features.append_row(s.features);
  dates.push_back(s.timestamp);
  precip.push_back(s.precip);
}

void Dataset::validate_and_sort() {
  if (dates.empty()) throw Error(ErrorCode::kEmptyDataset, "point " + point.key());
  if (features.rows() != dates.size() || precip.size() != dates.size() ||
      features.cols() != kNumFeatures) {
    throw Error(ErrorCode::kShapeMismatch, "dataset columns disagree in length");
  }
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      if (!std::isfinite(features(r, c))) {
        throw Error(ErrorCode::kNonFiniteValue, "row " + std::to_string(r) + ", column " +
                                                    feature_name(c));
      }
    }
    if (!std::isfinite(precip[r])) {
      throw Error(ErrorCode::kNonFiniteValue, "row " + std::to_string(r) + ", column precip");
    }
    if (precip[r] < 0.0) {
      throw Error(ErrorCode::kInvalidValue,
                  "negative precip at row " + std::to_string(r));
    }
  }
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dates[a] < dates[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (dates[order[i]] == dates[order[i - 1]]) {
      throw Error(ErrorCode::kDuplicateTimestamp,
                  dates[order[i]].to_string() + " at point " + point.key());
    }
  }
  if (!std::is_sorted(order.begin(), order.end())) *this = select(order);
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out;
  out.point = point;
  out.features = features.select_rows(rows);
  out.dates.reserve(rows.size());
  out.precip.reserve(rows.size());
  for (std::size_t r : rows) {
    out.dates.push_back(dates.at(r));
    out.precip.push_back(precip.at(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split

std::size_t test_count(std::size_t n, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kFractionOutOfRange, "train_fraction " + format_double(train_fraction));
  }
  // The epsilon keeps exact halves (e.g. 1.5) from rounding down through
  // representation error in (1 - fraction).
  const double raw = (1.0 - train_fraction) * static_cast<double>(n);
  const auto count = static_cast<std::size_t>(std::floor(raw + 0.5 + 1e-9));
  return std::max<std::size_t>(count, 1);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, const SplitSpec& spec) {
  const std::size_t n_test = test_count(n, spec.train_fraction);
  if (n_test >= n) {
    throw Error(ErrorCode::kFractionOutOfRange,
                std::to_string(n) + " samples cannot give a nonempty train and test split");
  }
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  if (spec.mode == SplitMode::kChronological) {
    for (std::size_t i = 0; i < n; ++i) (i < n - n_test ? train : test).push_back(i);
    return {train, test};
  }
  Rng rng(spec.seed);
  std::vector<bool> in_test(n, false);
  for (std::size_t i : rng.sample_without_replacement(n, n_test)) in_test[i] = true;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? test : train).push_back(i);
  return {train, test};
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot split an empty dataset");
  auto [train, test] = split_indices(data.size(), spec);
  return {data.select(train), data.select(test)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::size_t kCsvColumns = 4 + kNumFeatures + 1;

std::vector<std::string> csv_header() {
  std::vector<std::string> cols = {"date", "lon", "lat", "elev"};
  for (const auto& name : feature_names()) cols.push_back(name);
  cols.emplace_back("precip");
  return cols;
}

// Maps each expected column to its position in the file header.
std::vector<std::size_t> resolve_header(const std::vector<std::string_view>& fields) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string name(trim(fields[i]));
    if (!position.emplace(name, i).second) {
      throw Error(ErrorCode::kParse, "duplicate column '" + name + "'");
    }
  }
  const auto expected = csv_header();
  std::vector<std::size_t> map;
  for (const auto& name : expected) {
    auto it = position.find(name);
    if (it == position.end()) throw Error(ErrorCode::kMissingColumn, name);
    map.push_back(it->second);
    position.erase(it);
  }
  if (!position.empty()) {
    // Report the first extra column in file order.
    auto first = std::min_element(position.begin(), position.end(),
                                  [](auto& a, auto& b) { return a.second < b.second; });
    throw Error(ErrorCode::kUnknownColumn, first->first);
  }
  return map;
}

}  // namespace

std::vector<Dataset> read_csv_all(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kEmptyDataset, "missing header");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto columns = resolve_header(split_fields(line, ','));

  std::vector<Dataset> out;
  std::size_t row = 0;
  std::vector<double> values(kNumFeatures);
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != kCsvColumns) {
      throw Error(ErrorCode::kParse, "row " + std::to_string(row) + " has " +
                                         std::to_string(fields.size()) + " fields");
    }
    const auto field = [&](std::size_t expected) { return fields[columns[expected]]; };
    const auto number = [&](std::size_t expected) {
      try {
        return parse_double(field(expected));
      } catch (const Error&) {
        throw Error(ErrorCode::kParse, "row " + std::to_string(row) + ", column " +
                                           csv_header()[expected]);
      }
    };
    IndexPoint point{number(1), number(2), number(3), ""};
    Sample sample;
    sample.timestamp = YearMonth::parse(field(0));
    for (std::size_t j = 0; j < kNumFeatures; ++j) values[j] = number(4 + j);
    sample.features = values;
    sample.precip = number(4 + kNumFeatures);

    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Dataset& d) { return d.point.same_location(point); });
    if (it == out.end()) {
      for (const auto& ref : reference_points()) {
        if (ref.same_location(point)) point.id = ref.id;
      }
      out.emplace_back();
      out.back().point = point;
      it = std::prev(out.end());
    }
    it->push_back(sample);
  }
  for (auto& d : out) d.validate_and_sort();
  return out;
}

std::vector<Dataset> load_csv_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_csv_all(in);
}

Dataset load_csv(const std::filesystem::path& path, const IndexPoint& point) {
  for (auto& d : load_csv_all(path)) {
    if (d.point.same_location(point)) {
      if (!point.id.empty()) d.point.id = point.id;
      return std::move(d);
    }
  }
  throw Error(ErrorCode::kEmptyDataset, "no rows for point " + point.key() + " in " + path.string());
}

void write_csv(std::ostream& out, std::span<const Dataset> datasets) {
  const auto header = csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& d : datasets) {
    const std::string prefix = "," + format_double(d.point.lon) + "," +
                               format_double(d.point.lat) + "," + format_double(d.point.elev);
    for (std::size_t r = 0; r < d.size(); ++r) {
      out << d.dates[r].to_string() << prefix;
      for (double v : d.features.row(r)) out << ',' << format_double(v);
      out << ',' << format_double(d.precip[r]) << '\n';
    }
  }
}

void save_csv(const std::filesystem::path& path, std::span<const Dataset> datasets) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_csv(out, datasets);
}

// ---------------------------------------------------------------------------
// Synthetic data

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_samples < 20) {
    throw Error(ErrorCode::kTooFewSamples, std::to_string(spec.n_samples) + " < 20");
  }
  if (spec.planted.empty()) throw Error(ErrorCode::kEmptyPlantedSet, "no planted features");
  if (spec.planted.size() > 10) {
    throw Error(ErrorCode::kInvalidValue, "at most 10 planted features");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw Error(ErrorCode::kInvalidValue, "noise_sigma must be finite and >= 0");
  }

  GroundTruth truth;
  for (const auto& id : spec.planted) {
    if (std::find(truth.planted.begin(), truth.planted.end(), id.feature_index()) !=
        truth.planted.end()) {
      throw Error(ErrorCode::kInvalidValue, "duplicate planted feature " + feature_name(id));
    }
    truth.planted.push_back(id.feature_index());
  }
  const std::size_t k = truth.planted.size();
  for (std::size_t j = 0; j < k; ++j) truth.linear_weights.push_back(1.0 + 0.25 * static_cast<double>(j));
  truth.has_interaction = spec.shape == SignalShape::kMixed && k >= 2;
  truth.has_threshold = spec.shape == SignalShape::kMixed;

  Rng rng(spec.seed);
  const std::size_t n = spec.n_samples;
  Dataset data;
  data.point = spec.point;
  data.features = Matrix(n, kNumFeatures);
  YearMonth date = spec.start;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) data.features(r, c) = rng.normal();
    data.dates.push_back(date);
    date = date.next();
  }

  std::vector<double> g(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = data.features.row(r);
    double value = 0.0;
    for (std::size_t j = 0; j < k; ++j) value += truth.linear_weights[j] * x[truth.planted[j]];
    if (truth.has_interaction) value += x[truth.planted[0]] * x[truth.planted[1]];
    if (truth.has_threshold && x[truth.planted[k - 1]] > 0.0) value += 2.0;
    g[r] = value;
  }
  const double mean_g = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : g) ss += (v - mean_g) * (v - mean_g);
  truth.signal_std = std::sqrt(ss / static_cast<double>(n - 1));
  truth.noise_sigma =
      spec.noise_relative_to_signal ? spec.noise_sigma * truth.signal_std : spec.noise_sigma;

  // Noise is drawn from a separate stream so the features do not depend on it.
  Rng noise_rng(derive_seed(spec.seed, 0x6e6f697365ULL));
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    y[r] = truth.noise_sigma > 0.0 ? g[r] + truth.noise_sigma * noise_rng.normal() : g[r];
  }
  truth.offset = *std::min_element(y.begin(), y.end());
  data.precip.resize(n);
  for (std::size_t r = 0; r < n; ++r) data.precip[r] = truth.scale * (y[r] - truth.offset);

  std::ostringstream desc;
  desc << "precip = " << truth.scale << " * (g + noise - " << format_double(truth.offset)
       << "), g = ";
  for (std::size_t j = 0; j < k; ++j) {
    desc << (j ? " + " : "") << truth.linear_weights[j] << "*" << feature_name(truth.planted[j]);
  }
  if (truth.has_interaction) {
    desc << " + " << feature_name(truth.planted[0]) << "*" << feature_name(truth.planted[1]);
  }
  if (truth.has_threshold) desc << " + 2*[" << feature_name(truth.planted[k - 1]) << " > 0]";
  desc << ", noise sigma " << format_double(truth.noise_sigma);
  truth.description = desc.str();

  data.validate_and_sort();
  return {std::move(data), std::move(truth)};
}

}  // namespace hydrocast
