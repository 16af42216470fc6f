#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrs/metrics/metrics.hpp"

namespace cdrs::metrics {

inline const std::vector<std::string> kMetricColumns{"fid", "diversity", "label_score",
                                                     "acceptance_rate"};

/// label,fid,diversity,label_score,acceptance_rate,status; one row per label,
/// then "mean" and "sd" footer rows over the valid labels.
void write_report_csv(const EvaluationReport& report, std::ostream& out);

nlohmann::json report_to_json(const EvaluationReport& report);

/// method,fid,diversity,label_score,acceptance_rate with rows for both methods
/// and a "delta" row (subsampled minus baseline, aggregate means).
void write_comparison_csv(const EvaluationReport& baseline, const EvaluationReport& subsampled,
                          std::ostream& out);

nlohmann::json comparison_to_json(const EvaluationReport& baseline,
                                  const EvaluationReport& subsampled);

}  // namespace cdrs::metrics
