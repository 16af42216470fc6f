#include "cdrs/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cdrs/numfmt.hpp"

namespace cdrs::metrics {

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json stat_json(const ColumnStat& s) {
  return {{"mean", number(s.mean)}, {"sd", number(s.sd)}};
}

void write_stat_row(std::ostream& out, const char* name, const EvaluationReport& r,
                    double ColumnStat::*part) {
  out << name << ',' << format_double(r.fid.*part) << ',' << format_double(r.diversity.*part)
      << ',' << format_double(r.label_score.*part) << ','
      << format_double(r.acceptance_rate.*part) << ",aggregate\n";
}

}  // namespace

void write_report_csv(const EvaluationReport& report, std::ostream& out) {
  out << "label,fid,diversity,label_score,acceptance_rate,status\n";
  for (const auto& row : report.per_label) {
    std::string status = row.valid ? "ok" : row.note;
    std::replace(status.begin(), status.end(), ',', ';');
    out << format_double(row.label) << ',' << format_double(row.fid) << ','
        << format_double(row.diversity) << ',' << format_double(row.label_score) << ','
        << format_double(row.acceptance_rate) << ',' << status << '\n';
  }
  write_stat_row(out, "mean", report, &ColumnStat::mean);
  write_stat_row(out, "sd", report, &ColumnStat::sd);
}

nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.per_label) {
    nlohmann::json r{{"label", row.label},
                     {"fid", number(row.fid)},
                     {"diversity", number(row.diversity)},
                     {"label_score", number(row.label_score)},
                     {"acceptance_rate", number(row.acceptance_rate)},
                     {"valid", row.valid}};
    if (!row.valid) r["note"] = row.note;
    rows.push_back(std::move(r));
  }
  return {{"per_label", rows},
          {"valid_labels", report.valid_rows},
          {"aggregate",
           {{"fid", stat_json(report.fid)},
            {"diversity", stat_json(report.diversity)},
            {"label_score", stat_json(report.label_score)},
            {"acceptance_rate", stat_json(report.acceptance_rate)}}}};
}

void write_comparison_csv(const EvaluationReport& baseline, const EvaluationReport& subsampled,
                          std::ostream& out) {
  out << "method,fid,diversity,label_score,acceptance_rate\n";
  auto row = [&](const char* name, double fid, double div, double ls, double acc) {
    out << name << ',' << format_double(fid) << ',' << format_double(div) << ','
        << format_double(ls) << ',' << format_double(acc) << '\n';
  };
  row("baseline", baseline.fid.mean, baseline.diversity.mean, baseline.label_score.mean,
      baseline.acceptance_rate.mean);
  row("subsampled", subsampled.fid.mean, subsampled.diversity.mean, subsampled.label_score.mean,
      subsampled.acceptance_rate.mean);
  row("delta", subsampled.fid.mean - baseline.fid.mean,
      subsampled.diversity.mean - baseline.diversity.mean,
      subsampled.label_score.mean - baseline.label_score.mean,
      subsampled.acceptance_rate.mean - baseline.acceptance_rate.mean);
}

nlohmann::json comparison_to_json(const EvaluationReport& baseline,
                                  const EvaluationReport& subsampled) {
  auto means = [](const EvaluationReport& r) {
    return nlohmann::json{{"fid", number(r.fid.mean)},
                          {"diversity", number(r.diversity.mean)},
                          {"label_score", number(r.label_score.mean)},
                          {"acceptance_rate", number(r.acceptance_rate.mean)}};
  };
  return {{"baseline", means(baseline)},
          {"subsampled", means(subsampled)},
          {"delta",
           {{"fid", number(subsampled.fid.mean - baseline.fid.mean)},
            {"diversity", number(subsampled.diversity.mean - baseline.diversity.mean)},
            {"label_score", number(subsampled.label_score.mean - baseline.label_score.mean)},
            {"acceptance_rate",
             number(subsampled.acceptance_rate.mean - baseline.acceptance_rate.mean)}}}};
}

}  // namespace cdrs::metrics
