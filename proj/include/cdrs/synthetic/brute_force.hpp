#pragma once

#include <cstdint>
#include <vector>

#include "cdrs/synthetic/task.hpp"

namespace cdrs::synthetic {

struct BruteForceSpec {
  std::size_t samples = 1'000'000;
  double half_width = 0.1;  // box window half-width per coordinate
  std::uint64_t seed = 0;
};

/// Histogram-style ratio estimate: counts of real and fake draws inside the
/// same axis-aligned box around h. Only for tasks of dimension 1 or 2.
class BruteForceRatio {
 public:
  BruteForceRatio(const ConditionalGaussianTask& task, double y, const BruteForceSpec& spec);

  /// NaN where no fake draw lands in the window.
  double operator()(const Vector& h) const;

 private:
  struct Cloud {
    std::vector<double> x0;  // sorted
    std::vector<double> x1;  // aligned with x0; empty for 1-D tasks
    std::size_t count_in_box(const Vector& h, double half_width) const;
  };
  static Cloud build(const SampleBatch& batch);

  int dim_;
  double half_width_;
  Cloud real_;
  Cloud fake_;
};

double brute_force_ratio(const ConditionalGaussianTask& task, const Vector& h, double y,
                         const BruteForceSpec& spec = {});

}  // namespace cdrs::synthetic
