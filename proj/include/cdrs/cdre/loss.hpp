#pragma once

#include <span>

#include "cdrs/nn/types.hpp"

namespace cdrs::cdre {

double sigmoid(double t);
/// log(1 + e^t) without overflow.
double softplus(double t);

/// Conditional Softplus loss on ratio scores of fake and real samples.
double csp_loss(std::span<const double> fake_scores, std::span<const double> real_scores);

/// (mean(fake_scores) - 1)^2.
double penalty(std::span<const double> fake_scores);

struct ObjectiveTerms {
  double value = 0.0;  // csp + lambda * penalty
  double csp = 0.0;
  double penalty = 0.0;
  Vector fake_grad;    // d value / d fake_scores
  Vector real_grad;    // d value / d real_scores
};

/// Penalized objective and its gradient with respect to every score.
ObjectiveTerms penalized_objective(std::span<const double> fake_scores,
                                   std::span<const double> real_scores, double lambda);

}  // namespace cdrs::cdre
