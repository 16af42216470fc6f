#include "cdrs/synthetic/brute_force.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "cdrs/error.hpp"
#include "cdrs/seed.hpp"

namespace cdrs::synthetic {

BruteForceRatio::BruteForceRatio(const ConditionalGaussianTask& task, double y,
                                 const BruteForceSpec& spec)
    : dim_(task.dim()), half_width_(spec.half_width) {
  if (dim_ > 2) throw Unsupported("brute_force_ratio supports tasks of dimension <= 2");
  require(spec.samples >= 1 && spec.half_width > 0.0, "brute_force_ratio: bad window spec");
  Rng real_rng(derive_seed(spec.seed, "brute_force.real", y));
  Rng fake_rng(derive_seed(spec.seed, "brute_force.fake", y));
  real_ = build(task.sample_real(y, spec.samples, real_rng));
  fake_ = build(task.sample_fake(y, spec.samples, fake_rng));
}

BruteForceRatio::Cloud BruteForceRatio::build(const SampleBatch& batch) {
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch.x(0, static_cast<Eigen::Index>(a)) < batch.x(0, static_cast<Eigen::Index>(b));
  });
  Cloud c;
  c.x0.reserve(n);
  for (std::size_t i : order) c.x0.push_back(batch.x(0, static_cast<Eigen::Index>(i)));
  if (batch.x.rows() == 2) {
    c.x1.reserve(n);
    for (std::size_t i : order) c.x1.push_back(batch.x(1, static_cast<Eigen::Index>(i)));
  }
  return c;
}

std::size_t BruteForceRatio::Cloud::count_in_box(const Vector& h, double half_width) const {
  const auto lo = std::lower_bound(x0.begin(), x0.end(), h(0) - half_width);
  const auto hi = std::upper_bound(lo, x0.end(), h(0) + half_width);
  if (x1.empty()) return static_cast<std::size_t>(hi - lo);
  std::size_t count = 0;
  for (auto i = static_cast<std::size_t>(lo - x0.begin()),
            end = static_cast<std::size_t>(hi - x0.begin());
       i < end; ++i) {
    if (std::abs(x1[i] - h(1)) <= half_width) ++count;
  }
  return count;
}

double BruteForceRatio::operator()(const Vector& h) const {
  require(h.size() == dim_, "brute_force_ratio: feature dimension mismatch");
  const std::size_t fake = fake_.count_in_box(h, half_width_);
  if (fake == 0) return std::numeric_limits<double>::quiet_NaN();
  // Both clouds hold the same number of draws, so the counts' ratio is the density ratio.
  return static_cast<double>(real_.count_in_box(h, half_width_)) / static_cast<double>(fake);
}

double brute_force_ratio(const ConditionalGaussianTask& task, const Vector& h, double y,
                         const BruteForceSpec& spec) {
  return BruteForceRatio(task, y, spec)(h);
}

}  // namespace cdrs::synthetic
