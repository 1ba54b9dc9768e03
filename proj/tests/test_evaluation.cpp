#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hydrocast/error.hpp"
#include "hydrocast/evaluation.hpp"
#include "hydrocast/random.hpp"
#include "oracles.hpp"

using namespace hydrocast;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

using V = std::vector<double>;

V random_vector(Rng& rng, std::size_t n) {
  V v(n);
  for (auto& x : v) x = rng.normal() * 3.0 + 1.0;
  return v;
}

EvalResult row(const IndexPoint& p, LearnerKind k, double rho, double mae, double sd) {
  return EvalResult{p, k, rho, mae, sd, 44};
}

// First block of the published comparison, used as a layout fixture.
std::vector<EvalResult> published_first_point() {
  const IndexPoint p = reference_points()[0];
  return {row(p, LearnerKind::kRF, 0.89, 3.59, 3.34), row(p, LearnerKind::kKNN, 0.87, 3.74, 3.84),
          row(p, LearnerKind::kSVR, 0.47, 5.34, 7.92), row(p, LearnerKind::kLR, 0.88, 3.85, 3.29),
          row(p, LearnerKind::kMLP, 0.91, 3.7, 2.89)};
}

}  // namespace

TEST_CASE("metric examples") {
  CHECK(pearson(V{1, 2, 3}, V{1, 2, 3}) == 1.0);
  CHECK(pearson(V{1, 2, 3}, V{3, 2, 1}) == -1.0);
  CHECK(std::fabs(pearson(V{2, 4, 6, 8}, V{2, 5, 5, 9}) - 21.0 / std::sqrt(495.0)) < 1e-12);
  CHECK(pearson(V{2, 4, 6, 8}, V{2, 5, 5, 9}) == doctest::Approx(0.94388).epsilon(1e-5));

  CHECK(mae(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
  CHECK(mae(V{1, 2, 3}, V{2, 2, 5}) == 1.0);
  CHECK(mae(V{5}, V{7}) == 2.0);

  CHECK(error_std(V{1, 2, 3}, V{1, 2, 3}) == 0.0);
  CHECK(error_std(V{0, 0, 0}, V{1, 0, 2}) == 1.0);
  CHECK(error_std(V{0, 0, 0}, V{2.5, -2.5, 2.5}) == 0.0);
}

TEST_CASE("metric errors") {
  CHECK(code_of([] { pearson(V{1, 1, 1}, V{1, 2, 3}); }) == ErrorCode::kZeroVariance);
  CHECK(code_of([] { pearson(V{1, 2, 3}, V{4, 4, 4}); }) == ErrorCode::kZeroVariance);
  CHECK(code_of([] { pearson(V{1, 2}, V{1, 2, 3}); }) == ErrorCode::kLengthMismatch);
  CHECK(code_of([] { mae(V{1, 2}, V{1}); }) == ErrorCode::kLengthMismatch);
  CHECK(code_of([] { error_std(V{1, 2}, V{1}); }) == ErrorCode::kLengthMismatch);
}

TEST_CASE("metrics agree with the reference implementations") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(200);
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    REQUIRE(std::fabs(pearson(a, b) - oracle::pearson(a, b)) < 1e-9);
    REQUIRE(std::fabs(mae(a, b) - oracle::mae(a, b)) < 1e-9);
    REQUIRE(std::fabs(error_std(a, b) - oracle::error_std(a, b)) < 1e-9);
  }
}

TEST_CASE("metric properties") {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(50);
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    const auto c = random_vector(rng, n);
    const double r = pearson(a, b);
    REQUIRE(std::fabs(r) <= 1.0);

    const double alpha = 0.01 + 10 * rng.uniform();
    const double beta = rng.normal() * 100;
    V affine(n);
    V flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      affine[i] = alpha * b[i] + beta;
      flipped[i] = -alpha * b[i] + beta;
    }
    REQUIRE(std::fabs(pearson(a, affine) - r) < 1e-9);
    REQUIRE(std::fabs(pearson(a, flipped) + r) < 1e-9);

    REQUIRE(mae(a, c) <= mae(a, b) + mae(b, c) + 1e-12);
    REQUIRE(mae(a, b) >= 0.0);
    REQUIRE(error_std(a, b) >= 0.0);

    // Equal absolute errors give zero spread, whatever their signs.
    const double d = rng.uniform(0.0, 3.0);
    V shifted(n);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = a[i] + (rng.uniform() < 0.5 ? d : -d);
    REQUIRE(error_std(a, shifted) < 1e-12);
  }
}

TEST_CASE("evaluate packs the three numbers") {
  const auto r = evaluate(reference_points()[2], LearnerKind::kLR, V{2, 4, 6, 8}, V{2, 5, 5, 9});
  CHECK(r.model == LearnerKind::kLR);
  CHECK(r.n_test == 4);
  CHECK(r.rho == doctest::Approx(0.94388).epsilon(1e-5));
  CHECK(r.mae == 0.75);
  CHECK(r.std == doctest::Approx(0.5));
}

TEST_CASE("report layout follows the published first block") {
  const EvaluationReport report(published_first_point());
  REQUIRE(report.best_per_point().size() == 1);
  CHECK(report.best_per_point()[0].second == LearnerKind::kMLP);
  const auto text = render_report(report, ReportFormat::kText);
  // Rows carrying the best-model mark; the legend line starts with the mark.
  std::size_t marked_rows = 0;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);)
    if (line.find(" *") != std::string::npos && line.front() != '*') ++marked_rows;
  CHECK(marked_rows == 1);
  CHECK(text.find("MLP *") != std::string::npos);
  CHECK(text.find("0.91") != std::string::npos);

  const auto csv = render_report(report, ReportFormat::kCsv);
  CHECK(csv.rfind("lon,lat,elev,model,pearson,mae,std,is_best\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.find(",MLP,0.91,3.7,2.89,1") != std::string::npos);
  CHECK(csv.find(",RF,0.89,3.59,3.34,0") != std::string::npos);
}

TEST_CASE("best model selection and ordering") {
  const auto pts = reference_points();
  std::vector<EvalResult> rows;
  // Second point first, kinds scrambled; ties on rho broken by MAE, then kind.
  rows.push_back(row(pts[1], LearnerKind::kMLP, 0.7, 1.0, 1.0));
  rows.push_back(row(pts[1], LearnerKind::kLR, 0.7, 0.9, 1.0));
  rows.push_back(row(pts[0], LearnerKind::kSVR, 0.5, 2.0, 1.0));
  rows.push_back(row(pts[0], LearnerKind::kKNN, 0.5, 2.0, 1.0));
  rows.push_back(row(pts[1], LearnerKind::kRF, 0.6, 0.1, 1.0));
  const EvaluationReport report(rows);
  const auto& r = report.rows();
  REQUIRE(r.size() == 5);
  CHECK(r[0].point.key() == pts[1].key());
  CHECK(r[0].model == LearnerKind::kRF);
  CHECK(r[1].model == LearnerKind::kLR);
  CHECK(r[2].model == LearnerKind::kMLP);
  CHECK(r[3].model == LearnerKind::kKNN);
  CHECK(r[4].model == LearnerKind::kSVR);
  REQUIRE(report.best_per_point().size() == 2);
  CHECK(report.best_per_point()[0].second == LearnerKind::kLR);
  CHECK(report.best_per_point()[1].second == LearnerKind::kKNN);
  std::size_t marked = 0;
  for (const auto& x : r) marked += report.is_best(x) ? 1 : 0;
  CHECK(marked == 2);
}

TEST_CASE("report round trips") {
  Rng rng(5);
  std::vector<EvalResult> rows;
  for (std::size_t p = 0; p < 13; ++p)
    for (auto k : kAllLearners)
      rows.push_back(row(reference_points()[p], k, rng.uniform(-1, 1), rng.uniform(0, 50), rng.uniform(0, 50)));
  const EvaluationReport report(rows);

  const auto parsed = parse_report_csv(render_report(report, ReportFormat::kCsv));
  REQUIRE(parsed.rows().size() == 65);
  for (std::size_t i = 0; i < 65; ++i) {
    const auto& a = report.rows()[i];
    const auto& b = parsed.rows()[i];
    CHECK(a.point.key() == b.point.key());
    CHECK(a.point.elev == doctest::Approx(b.point.elev).epsilon(1e-9));
    CHECK(a.model == b.model);
    CHECK(std::fabs(a.rho - b.rho) < 1e-9);
    CHECK(std::fabs(a.mae - b.mae) < 1e-9);
    CHECK(std::fabs(a.std - b.std) < 1e-9);
  }
  REQUIRE(parsed.best_per_point().size() == 13);
  for (std::size_t p = 0; p < 13; ++p) {
    CHECK(parsed.best_per_point()[p].first.key() == report.best_per_point()[p].first.key());
    CHECK(parsed.best_per_point()[p].second == report.best_per_point()[p].second);
  }

  const auto doc = nlohmann::json::parse(render_report(report, ReportFormat::kJson));
  const auto back = report_from_json(doc);
  CHECK(to_json(back) == to_json(report));
}

TEST_CASE("format names and empty reports") {
  CHECK(parse_report_format("csv") == ReportFormat::kCsv);
  CHECK(parse_report_format("json") == ReportFormat::kJson);
  CHECK(parse_report_format("text") == ReportFormat::kText);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
  CHECK(format_extension(ReportFormat::kText) == "txt");
  for (auto f : {ReportFormat::kText, ReportFormat::kCsv, ReportFormat::kJson})
    CHECK(code_of([&] { render_report(EvaluationReport{}, f); }) == ErrorCode::kEmptyReport);
}
