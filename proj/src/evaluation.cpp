#include "hydrocast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "hydrocast/error.hpp"
#include "hydrocast/text.hpp"

namespace hydrocast {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.size() < min) {
    throw Error(ErrorCode::kLengthMismatch, "need at least " + std::to_string(min) + " values");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 2);
  const double ma = mean_of(actual);
  const double mp = mean_of(predicted);
  double cov = 0.0;
  double va = 0.0;
  double vp = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double da = actual[i] - ma;
    const double dp = predicted[i] - mp;
    cov += da * dp;
    va += da * da;
    vp += dp * dp;
  }
  if (va == 0.0 || vp == 0.0) throw Error(ErrorCode::kZeroVariance, "constant series");
  // The (n - 1) factors cancel.
  return std::clamp(cov / std::sqrt(va * vp), -1.0, 1.0);
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
  return sum / static_cast<double>(actual.size());
}

double error_std(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual, predicted, 2);
  std::vector<double> abs_err(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) abs_err[i] = std::abs(actual[i] - predicted[i]);
  const double m = mean_of(abs_err);
  double ss = 0.0;
  for (double e : abs_err) ss += (e - m) * (e - m);
  return std::sqrt(ss / static_cast<double>(abs_err.size() - 1));
}

EvalResult evaluate(const IndexPoint& point, LearnerKind model, std::span<const double> actual,
                    std::span<const double> predicted) {
  return {point, model, pearson(actual, predicted), mae(actual, predicted),
          error_std(actual, predicted), actual.size()};
}

// ---------------------------------------------------------------------------

EvaluationReport::EvaluationReport(std::vector<EvalResult> rows) {
  std::vector<IndexPoint> points;
  const auto point_rank = [&](const IndexPoint& p) {
    auto it = std::find_if(points.begin(), points.end(),
                           [&](const IndexPoint& q) { return q.same_location(p); });
    return static_cast<std::size_t>(it - points.begin());
  };
  for (const auto& r : rows) {
    if (point_rank(r.point) == points.size()) points.push_back(r.point);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const EvalResult& a, const EvalResult& b) {
    const auto pa = point_rank(a.point);
    const auto pb = point_rank(b.point);
    return pa != pb ? pa < pb : a.model < b.model;
  });
  rows_ = std::move(rows);

  for (const auto& p : points) {
    const EvalResult* best = nullptr;
    for (const auto& r : rows_) {
      if (!r.point.same_location(p)) continue;
      if (!best || r.rho > best->rho || (r.rho == best->rho && r.mae < best->mae)) best = &r;
    }
    best_.emplace_back(best->point, best->model);
  }
}

bool EvaluationReport::is_best(const EvalResult& row) const {
  return std::any_of(best_.begin(), best_.end(), [&](const auto& b) {
    return b.first.same_location(row.point) && b.second == row.model;
  });
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "text" || name == "text-table" || name == "txt") return ReportFormat::kText;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw Error(ErrorCode::kUnknownName, "report format '" + std::string(name) + "'");
}

std::string_view format_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::kText: return "txt";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kJson: return "json";
  }
  return "txt";
}

nlohmann::json to_json(const EvalResult& row) {
  return {{"lon", row.point.lon},   {"lat", row.point.lat}, {"elev", row.point.elev},
          {"id", row.point.id},     {"model", kind_name(row.model)},
          {"pearson", row.rho},     {"mae", row.mae},       {"std", row.std},
          {"n_test", row.n_test}};
}

EvalResult eval_result_from_json(const nlohmann::json& doc) {
  try {
    EvalResult r;
    r.point = {doc.at("lon").get<double>(), doc.at("lat").get<double>(),
               doc.at("elev").get<double>(), doc.value("id", "")};
    r.model = parse_kind(doc.at("model").get<std::string>());
    r.rho = doc.at("pearson").get<double>();
    r.mae = doc.at("mae").get<double>();
    r.std = doc.at("std").get<double>();
    r.n_test = doc.value("n_test", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("evaluation json: ") + e.what());
  }
}

nlohmann::json to_json(const EvaluationReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows()) {
    auto j = to_json(r);
    j["is_best"] = report.is_best(r);
    rows.push_back(std::move(j));
  }
  auto best = nlohmann::json::array();
  for (const auto& [point, kind] : report.best_per_point()) {
    best.push_back({{"lon", point.lon}, {"lat", point.lat}, {"elev", point.elev},
                    {"model", kind_name(kind)}});
  }
  return {{"rows", std::move(rows)}, {"best_per_point", std::move(best)}};
}

EvaluationReport report_from_json(const nlohmann::json& doc) {
  std::vector<EvalResult> rows;
  try {
    for (const auto& r : doc.at("rows")) rows.push_back(eval_result_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report json: ") + e.what());
  }
  return EvaluationReport(std::move(rows));
}

namespace {

std::string render_text(const EvaluationReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(34) << "Coordinate (lon, lat, elev)" << std::setw(8) << "Model"
      << std::right << std::setw(10) << "Pearson" << std::setw(11) << "MAE" << std::setw(11)
      << "STD" << '\n';
  out << std::string(74, '-') << '\n';
  const IndexPoint* current = nullptr;
  for (const auto& r : report.rows()) {
    std::string coord;
    if (!current || !current->same_location(r.point)) {
      if (current) out << '\n';
      coord = "(" + format_double(r.point.lon) + ", " + format_double(r.point.lat) + ", " +
              format_double(r.point.elev) + ")";
      current = &r.point;
    }
    std::string model(kind_name(r.model));
    if (report.is_best(r)) model += " *";
    out << std::left << std::setw(34) << coord << std::setw(8) << model << std::right
        << std::fixed << std::setprecision(2) << std::setw(10) << r.rho << std::setw(11) << r.mae
        << std::setw(11) << r.std << '\n';
  }
  out << "\n* best model per point (highest Pearson coefficient)\n";
  return out.str();
}

std::string render_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "lon,lat,elev,model,pearson,mae,std,is_best\n";
  for (const auto& r : report.rows()) {
    out << format_double(r.point.lon) << ',' << format_double(r.point.lat) << ','
        << format_double(r.point.elev) << ',' << kind_name(r.model) << ','
        << format_double(r.rho) << ',' << format_double(r.mae) << ',' << format_double(r.std)
        << ',' << (report.is_best(r) ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  if (report.rows().empty()) throw Error(ErrorCode::kEmptyReport, "no rows to render");
  switch (format) {
    case ReportFormat::kText: return render_text(report);
    case ReportFormat::kCsv: return render_csv(report);
    case ReportFormat::kJson: return to_json(report).dump(2) + "\n";
  }
  return {};
}

EvaluationReport parse_report_csv(std::string_view text) {
  std::vector<EvalResult> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (line_no++ == 0) {
      if (line != "lon,lat,elev,model,pearson,mae,std,is_best") {
        throw Error(ErrorCode::kParse, "unexpected report header");
      }
      continue;
    }
    const auto f = split_fields(line, ',');
    if (f.size() != 8) throw Error(ErrorCode::kParse, "report row has wrong field count");
    EvalResult r;
    r.point = {parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), ""};
    r.model = parse_kind(f[3]);
    r.rho = parse_double(f[4]);
    r.mae = parse_double(f[5]);
    r.std = parse_double(f[6]);
    rows.push_back(r);
  }
  return EvaluationReport(std::move(rows));
}

}  // namespace hydrocast
