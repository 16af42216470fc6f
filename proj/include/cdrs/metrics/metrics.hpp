#pragma once

#include <span>
#include <string>
#include <vector>

#include "cdrs/nn/types.hpp"

namespace cdrs::metrics {

/// Mean absolute difference between predicted and conditioning labels.
double label_score(std::span<const double> predicted, std::span<const double> conditioning);

/// Natural-log Shannon entropy of the empirical category frequencies.
/// With num_categories > 0, ids must lie in [0, num_categories).
double diversity_entropy(std::span<const int> ids, int num_categories = 0);

struct GaussianMoments {
  Vector mean;
  Matrix cov;  // unbiased (n - 1) normalization
};

/// Moments of the columns of `samples`; needs at least two columns.
GaussianMoments fit_moments(const Matrix& samples);

/// |m1 - m2|^2 + tr(C1 + C2 - 2 (C1 C2)^{1/2}).
double frechet_gaussian(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                        const Matrix& cov2);
double frechet_gaussian(const GaussianMoments& a, const GaussianMoments& b);

struct LabelSamples {
  double label = 0.0;
  Matrix fake;  // one column per sample
  Matrix real;
};

struct ColumnStat {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation across labels
};

struct ReportRow {
  double label = 0.0;
  double fid = 0.0;
  double diversity = 0.0;
  double label_score = 0.0;
  double acceptance_rate = 0.0;
  bool valid = true;  // false rows are excluded from the aggregate
  std::string note;
};

struct EvaluationReport {
  std::vector<ReportRow> per_label;
  ColumnStat fid;
  ColumnStat diversity;
  ColumnStat label_score;
  ColumnStat acceptance_rate;
  std::size_t valid_rows = 0;

  /// Recomputes every aggregate from the valid per-label rows.
  void recompute_aggregate();
};

/// Per-label Frechet distance between fitted moments of fake and real features.
/// Labels with fewer than dim + 1 samples on either side are flagged invalid.
EvaluationReport intra_fid(std::span<const LabelSamples> samples);

struct LabelEvaluationInput {
  double label = 0.0;
  Matrix fake;
  Matrix real;
  std::vector<int> attributes;          // of the fake samples
  std::vector<double> observed_labels;  // of the fake samples
  double acceptance_rate = 1.0;
};

/// Full report: FID, Diversity, Label Score, and the acceptance rate per label.
EvaluationReport evaluate_labels(std::span<const LabelEvaluationInput> inputs,
                                 int num_categories = 0);

}  // namespace cdrs::metrics
