#include <algorithm>
#include <filesystem>
#include <numeric>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hydrocast/error.hpp"
#include "hydrocast/pipeline.hpp"
#include "test_helpers.hpp"

using namespace hydrocast;
using testing_helpers::slurp;
using testing_helpers::TempDir;

namespace {

namespace fs = std::filesystem;

std::vector<FeatureId> planted_ids(const std::vector<std::string>& names) {
  std::vector<FeatureId> out;
  for (const auto& n : names) out.push_back(parse_feature_name(n));
  return out;
}

// Writes one synthetic dataset per point and returns a config pointing at it.
PipelineConfig small_config(const fs::path& dir, std::vector<IndexPoint> points,
                            SignalShape shape = SignalShape::kMixed, double noise = 0.1) {
  std::vector<Dataset> all;
  for (const auto& p : points) {
    SyntheticSpec spec;
    spec.n_samples = 120;
    spec.planted = planted_ids({"air_l01", "rhum_l01", "uwnd_l04"});
    spec.noise_sigma = noise;
    spec.noise_relative_to_signal = true;
    spec.shape = shape;
    spec.point = p;
    spec.seed = point_seed(5, p);
    all.push_back(generate_synthetic(spec).data);
  }
  save_csv(dir / "data.csv", all);

  PipelineConfig cfg;
  cfg.data_path = dir / "data.csv";
  cfg.index_points = std::move(points);
  cfg.selection.boost.trees_per_stage = 15;
  cfg.selection.boost.max_stages = 3;
  cfg.learners = default_learner_specs(0);
  for (auto& l : cfg.learners) {
    l.forest.n_trees = 20;
    l.mlp.epochs = 100;
  }
  cfg.seed = 9;
  return cfg;
}

std::vector<IndexPoint> first_points(std::size_t n) {
  const auto& ref = reference_points();
  return {ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(n)};
}

// Relative path -> file contents for every regular file below root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("noiseless linear data gives a perfect linear fit") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(1), SignalShape::kLinear, 0.0);
  const auto result = run_pipeline(cfg);
  REQUIRE(result.points.size() == 1);
  REQUIRE(result.points[0].error.empty());
  const auto& sel = *result.points[0].selection;
  for (auto f : {"air_l01", "rhum_l01", "uwnd_l04"})
    CHECK(std::count(sel.top_k.begin(), sel.top_k.end(), parse_feature_name(f).feature_index()) == 1);
  bool seen = false;
  for (const auto& r : result.report.rows()) {
    if (r.model != LearnerKind::kLR) continue;
    seen = true;
    CHECK(r.rho == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.n_test == 12);
  }
  CHECK(seen);
}

TEST_CASE("seeds depend on the master seed and the location only") {
  const auto& pts = reference_points();
  CHECK(point_seed(1, pts[0]) == point_seed(1, pts[0]));
  CHECK(point_seed(1, pts[0]) != point_seed(2, pts[0]));
  std::set<std::uint64_t> seeds;
  for (const auto& p : pts) seeds.insert(point_seed(1, p));
  CHECK(seeds.size() == pts.size());
  IndexPoint relabelled = pts[3];
  relabelled.id = "other";
  CHECK(point_seed(1, relabelled) == point_seed(1, pts[3]));

  PipelineConfig cfg;
  cfg.seed = 4;
  const auto specs = learner_specs_for(cfg, pts[0]);
  std::set<std::uint64_t> learner_seeds;
  for (const auto& s : specs) learner_seeds.insert(s.seed);
  CHECK(learner_seeds.size() == specs.size());
  CHECK(selection_config_for(cfg, pts[0]).boost.seed != selection_config_for(cfg, pts[1]).boost.seed);
}

TEST_CASE("selection never sees the held-out rows") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(1));
  const auto data = load_points(cfg).at(0);
  const auto [train_idx, test_idx] = split_indices(data.size(), split_spec_for(cfg, data.point));

  Dataset perturbed = data;
  for (auto r : test_idx) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) perturbed.features(r, c) = -perturbed.features(r, c) * 7.0 + 1.0;
    perturbed.precip[r] = 1000.0 + r;
  }
  CHECK(select_for_point(perturbed, cfg) == select_for_point(data, cfg));
  CHECK(selection_rows(data, cfg).size() == train_idx.size());

  cfg.select_on_all = true;
  CHECK(selection_rows(data, cfg).size() == data.size());
  CHECK_FALSE(select_for_point(perturbed, cfg) == select_for_point(data, cfg));
}

TEST_CASE("occurrence totals match a replay of the boosting run") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(1));
  const auto data = load_points(cfg).at(0);
  const auto sel = select_for_point(data, cfg);
  const auto rows = selection_rows(data, cfg);
  const auto sc = selection_config_for(cfg, data.point);
  const auto model = fit_boosted(rows.features, rows.precip, sc.boost, sel.kept_after_prune);
  std::size_t expected = 0;
  for (const auto& stage : model.stages)
    for (const auto& tree : stage) expected += tree.features_used().size();
  std::size_t total = 0;
  for (const auto& [f, c] : sel.occurrence) total += c;
  CHECK(total == expected);
  CHECK(sel.trees_fitted == model.tree_count());
}

TEST_CASE("pooled selection is shared by every point") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(3));
  cfg.pooled = true;
  const auto result = run_pipeline(cfg);
  REQUIRE(result.points.size() == 3);
  CHECK(*result.points[0].selection == *result.points[1].selection);
  CHECK(*result.points[1].selection == *result.points[2].selection);
  CHECK(result.report.rows().size() == 15);
}

TEST_CASE("runs are byte-for-byte reproducible") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(2));
  cfg.output_dir = dir / "a";
  run_pipeline(cfg);
  cfg.output_dir = dir / "b";
  run_pipeline(cfg);
  const auto a = snapshot(dir / "a");
  const auto b = snapshot(dir / "b");
  CHECK(a.size() == 11);  // 2 x 3 point files + 3 reports + 2 selection tables
  CHECK(a == b);
  CHECK(a.count("report.csv") == 1);
  CHECK(a.count("27.5_67.5/selection.json") == 1);
}

TEST_CASE("file-backed stages reproduce the single run") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(2));
  cfg.output_dir = dir / "run";
  run_pipeline(cfg);
  cfg.output_dir = dir / "staged";
  stage_select(cfg);
  stage_train(cfg);
  stage_evaluate(cfg);
  stage_report(cfg, {});
  CHECK(snapshot(dir / "run") == snapshot(dir / "staged"));
}

TEST_CASE("selection tables") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(2));
  const auto result = run_pipeline(cfg);
  std::vector<std::pair<IndexPoint, SelectionResult>> sels;
  for (const auto& p : result.points) sels.emplace_back(p.point, *p.selection);

  const auto top = render_top_features_csv(sels);
  CHECK(top.rfind("lon,lat,elev,top_features\n", 0) == 0);
  CHECK(std::count(top.begin(), top.end(), '\n') == 3);

  const auto freq = render_feature_frequency_csv(sels);
  CHECK(freq.rfind("feature,frequency\n", 0) == 0);
  std::size_t total = 0;
  std::istringstream in(freq);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) total += std::stoul(line.substr(line.find(',') + 1));
  CHECK(total == sels[0].second.top_k.size() + sels[1].second.top_k.size());
}

TEST_CASE("point failures") {
  TempDir dir("pipeline");
  auto cfg = small_config(dir.path(), first_points(2));
  cfg.index_points.push_back({99.0, 99.0, 0.0, "missing"});
  cfg.output_dir = dir / "out";
  CHECK_THROWS_AS(run_pipeline(cfg), Error);

  cfg.continue_on_error = true;
  const auto result = run_pipeline(cfg);
  REQUIRE(result.points.size() == 3);
  CHECK(result.points[0].error.empty());
  CHECK_FALSE(result.points[2].error.empty());
  CHECK(result.report.rows().size() == 10);
  CHECK(fs::exists(dir / "out" / "99_99" / "error.txt"));
}

TEST_CASE("config validation") {
  PipelineConfig cfg;
  cfg.selection.kappa = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = PipelineConfig{};
  cfg.split.train_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = PipelineConfig{};
  cfg.learners.push_back(cfg.learners.front());
  CHECK_THROWS_AS(cfg.validate(), Error);
}
