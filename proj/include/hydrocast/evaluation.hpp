#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hydrocast/dataset.hpp"
#include "hydrocast/learners.hpp"
#include "json.hpp"

namespace hydrocast {

// Sample covariance over the product of sample standard deviations, clamped
// to [-1, 1]. Throws kZeroVariance when either series is constant.
double pearson(std::span<const double> actual, std::span<const double> predicted);

// Mean absolute error.
double mae(std::span<const double> actual, std::span<const double> predicted);

// Sample (n - 1) standard deviation of the absolute errors.
double error_std(std::span<const double> actual, std::span<const double> predicted);

struct EvalResult {
  IndexPoint point;
  LearnerKind model = LearnerKind::kRF;
  double rho = 0.0;
  double mae = 0.0;
  double std = 0.0;
  std::size_t n_test = 0;
};

EvalResult evaluate(const IndexPoint& point, LearnerKind model, std::span<const double> actual,
                    std::span<const double> predicted);

class EvaluationReport {
 public:
  EvaluationReport() = default;
  // Rows are reordered by point (first appearance) and then report kind order.
  explicit EvaluationReport(std::vector<EvalResult> rows);

  const std::vector<EvalResult>& rows() const noexcept { return rows_; }
  // Highest rho; ties go to the lower MAE, then the earlier kind.
  const std::vector<std::pair<IndexPoint, LearnerKind>>& best_per_point() const noexcept {
    return best_;
  }
  bool is_best(const EvalResult& row) const;

 private:
  std::vector<EvalResult> rows_;
  std::vector<std::pair<IndexPoint, LearnerKind>> best_;
};

enum class ReportFormat { kText, kCsv, kJson };

ReportFormat parse_report_format(std::string_view name);
std::string_view format_extension(ReportFormat format);

// CSV header: lon,lat,elev,model,pearson,mae,std,is_best. Throws kEmptyReport.
std::string render_report(const EvaluationReport& report, ReportFormat format);

// Inverse of the CSV and JSON renderings (n_test is only kept by JSON).
EvaluationReport parse_report_csv(std::string_view text);
nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const EvalResult& row);
EvalResult eval_result_from_json(const nlohmann::json& doc);

}  // namespace hydrocast
