#include "cdrs/cdre/loss.hpp"

#include <cmath>

#include "cdrs/error.hpp"

namespace cdrs::cdre {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

namespace {

// sigma(s) s - softplus(s). For large s both terms are ~s, so rewrite as
// s (sigma(s) - 1) - log1p(e^-s) = -s sigma(-s) - log1p(e^-s), which is exact in the tail.
double fake_term(double s) {
  if (s > 0.0) return -s * sigmoid(-s) - std::log1p(std::exp(-s));
  return sigmoid(s) * s - softplus(s);
}

}  // namespace

double csp_loss(std::span<const double> fake_scores, std::span<const double> real_scores) {
  require(!fake_scores.empty() && !real_scores.empty(), "csp_loss: empty score vector");
  double fake = 0.0;
  for (double s : fake_scores) fake += fake_term(s);
  double real = 0.0;
  for (double s : real_scores) real += sigmoid(s);
  return fake / static_cast<double>(fake_scores.size()) -
         real / static_cast<double>(real_scores.size());
}

double penalty(std::span<const double> fake_scores) {
  require(!fake_scores.empty(), "penalty: empty score vector");
  double sum = 0.0;
  for (double s : fake_scores) sum += s;
  const double d = sum / static_cast<double>(fake_scores.size()) - 1.0;
  return d * d;
}

ObjectiveTerms penalized_objective(std::span<const double> fake_scores,
                                   std::span<const double> real_scores, double lambda) {
  ObjectiveTerms out;
  out.csp = csp_loss(fake_scores, real_scores);
  out.penalty = penalty(fake_scores);
  out.value = out.csp + lambda * out.penalty;

  const double n_fake = static_cast<double>(fake_scores.size());
  const double n_real = static_cast<double>(real_scores.size());
  double mean_fake = 0.0;
  for (double s : fake_scores) mean_fake += s;
  mean_fake /= n_fake;
  const double penalty_slope = lambda * 2.0 * (mean_fake - 1.0) / n_fake;

  // d/ds [sigma(s) s - softplus(s)] = sigma'(s) s; d/ds sigma(s) = sigma(s)(1 - sigma(s)).
  out.fake_grad.resize(static_cast<Eigen::Index>(fake_scores.size()));
  for (std::size_t i = 0; i < fake_scores.size(); ++i) {
    const double s = fake_scores[i];
    const double sig = sigmoid(s);
    out.fake_grad(static_cast<Eigen::Index>(i)) = sig * (1.0 - sig) * s / n_fake + penalty_slope;
  }
  out.real_grad.resize(static_cast<Eigen::Index>(real_scores.size()));
  for (std::size_t i = 0; i < real_scores.size(); ++i) {
    const double sig = sigmoid(real_scores[i]);
    out.real_grad(static_cast<Eigen::Index>(i)) = -sig * (1.0 - sig) / n_real;
  }
  return out;
}

}  // namespace cdrs::cdre
