#include "cdrs/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "cdrs/error.hpp"

namespace cdrs::metrics {

namespace {

constexpr double kNegativeEigenTolerance = -1e-8;

void check_symmetric(const Matrix& m, const char* which) {
  require(m.rows() == m.cols(), std::string(which) + " must be square");
  require(m.allFinite(), std::string(which) + " has non-finite entries");
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff()),
          std::string(which) + " must be symmetric");
}

Vector clamped_eigenvalues(const Eigen::SelfAdjointEigenSolver<Matrix>& eig, const char* what) {
  Vector values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < kNegativeEigenTolerance) {
      throw ContractViolation(std::string(what) + " has a negative eigenvalue " +
                              std::to_string(values(i)));
    }
    values(i) = std::max(values(i), 0.0);
  }
  return values;
}

}  // namespace

double label_score(std::span<const double> predicted, std::span<const double> conditioning) {
  require(!predicted.empty(), "label_score: empty input");
  require(predicted.size() == conditioning.size(), "label_score: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - conditioning[i]);
  return sum / static_cast<double>(predicted.size());
}

double diversity_entropy(std::span<const int> ids, int num_categories) {
  require(!ids.empty(), "diversity_entropy: empty input");
  std::map<int, std::size_t> counts;
  for (int id : ids) {
    require(id >= 0 && (num_categories <= 0 || id < num_categories),
            "diversity_entropy: category id out of range");
    ++counts[id];
  }
  const double n = static_cast<double>(ids.size());
  double h = 0.0;
  for (const auto& [id, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

GaussianMoments fit_moments(const Matrix& samples) {
  require(samples.cols() >= 2, "fit_moments: at least two samples required");
  GaussianMoments g;
  g.mean = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - g.mean;
  g.cov = centered * centered.transpose() / static_cast<double>(samples.cols() - 1);
  return g;
}

double frechet_gaussian(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                        const Matrix& cov2) {
  const auto d = mean1.size();
  require(d >= 1 && mean2.size() == d && cov1.rows() == d && cov2.rows() == d,
          "frechet_gaussian: dimension mismatch");
  check_symmetric(cov1, "frechet_gaussian: cov1");
  check_symmetric(cov2, "frechet_gaussian: cov2");

  Eigen::SelfAdjointEigenSolver<Matrix> eig1(cov1);
  const Vector root_values = clamped_eigenvalues(eig1, "frechet_gaussian: cov1").cwiseSqrt();
  clamped_eigenvalues(Eigen::SelfAdjointEigenSolver<Matrix>(cov2, Eigen::EigenvaluesOnly),
                      "frechet_gaussian: cov2");
  const Matrix root1 = eig1.eigenvectors() * root_values.asDiagonal() * eig1.eigenvectors().transpose();
  Matrix inner = root1 * cov2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  const Vector inner_values = clamped_eigenvalues(
      Eigen::SelfAdjointEigenSolver<Matrix>(inner, Eigen::EigenvaluesOnly),
      "frechet_gaussian: cov1^(1/2) cov2 cov1^(1/2)");

  const double value = (mean1 - mean2).squaredNorm() + cov1.trace() + cov2.trace() -
                       2.0 * inner_values.cwiseSqrt().sum();
  return std::max(value, 0.0);
}

double frechet_gaussian(const GaussianMoments& a, const GaussianMoments& b) {
  return frechet_gaussian(a.mean, a.cov, b.mean, b.cov);
}

void EvaluationReport::recompute_aggregate() {
  std::vector<const ReportRow*> rows;
  for (const auto& r : per_label) {
    if (r.valid) rows.push_back(&r);
  }
  valid_rows = rows.size();
  auto stat = [&](double ReportRow::*field) {
    ColumnStat s;
    if (rows.empty()) {
      s.mean = s.sd = std::nan("");
      return s;
    }
    for (const auto* r : rows) s.mean += r->*field;
    s.mean /= static_cast<double>(rows.size());
    double ss = 0.0;
    for (const auto* r : rows) ss += (r->*field - s.mean) * (r->*field - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(rows.size()));
    return s;
  };
  fid = stat(&ReportRow::fid);
  diversity = stat(&ReportRow::diversity);
  label_score = stat(&ReportRow::label_score);
  acceptance_rate = stat(&ReportRow::acceptance_rate);
}

namespace {

ReportRow fid_row(double label, const Matrix& fake, const Matrix& real) {
  ReportRow row;
  row.label = label;
  const auto need = fake.rows() + 1;
  if (fake.cols() < need || real.cols() < need || fake.rows() != real.rows()) {
    row.valid = false;
    row.fid = std::nan("");
    row.note = "insufficient samples: fake " + std::to_string(fake.cols()) + ", real " +
               std::to_string(real.cols()) + ", need " + std::to_string(need);
    return row;
  }
  row.fid = frechet_gaussian(fit_moments(fake), fit_moments(real));
  return row;
}

}  // namespace

EvaluationReport intra_fid(std::span<const LabelSamples> samples) {
  EvaluationReport report;
  for (const auto& s : samples) {
    ReportRow row = fid_row(s.label, s.fake, s.real);
    row.diversity = row.label_score = row.acceptance_rate = std::nan("");
    report.per_label.push_back(std::move(row));
  }
  report.recompute_aggregate();
  return report;
}

EvaluationReport evaluate_labels(std::span<const LabelEvaluationInput> inputs,
                                 int num_categories) {
  EvaluationReport report;
  for (const auto& in : inputs) {
    ReportRow row = fid_row(in.label, in.fake, in.real);
    row.acceptance_rate = in.acceptance_rate;
    if (in.fake.cols() == 0) {
      row.valid = false;
      row.diversity = row.label_score = std::nan("");
      if (row.note.empty()) row.note = "no samples";
    } else {
      require(in.attributes.size() == static_cast<std::size_t>(in.fake.cols()) &&
                  in.observed_labels.size() == in.attributes.size(),
              "evaluate_labels: attribute and label annotations must cover every sample");
      row.diversity = diversity_entropy(in.attributes, num_categories);
      const std::vector<double> conditioning(in.observed_labels.size(), in.label);
      row.label_score = label_score(in.observed_labels, conditioning);
    }
    report.per_label.push_back(std::move(row));
  }
  report.recompute_aggregate();
  return report;
}

}  // namespace cdrs::metrics
