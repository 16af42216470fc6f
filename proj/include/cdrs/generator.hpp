#pragma once

#include <cstddef>
#include <vector>

#include "cdrs/nn/types.hpp"

namespace cdrs {

/// Draws from a conditional generator, one column per sample. `actual_labels`
/// and `attributes` are oracle annotations carried for evaluation only; samplers
/// never read them.
struct SampleBatch {
  Matrix x;
  std::vector<double> actual_labels;
  std::vector<int> attributes;

  std::size_t size() const { return static_cast<std::size_t>(x.cols()); }
  SampleBatch subset(const std::vector<std::size_t>& indices) const;
  void append(const SampleBatch& other);
};

class ConditionalGenerator {
 public:
  virtual ~ConditionalGenerator() = default;
  virtual int dim() const = 0;
  virtual SampleBatch draw(double label, std::size_t n, Rng& rng) const = 0;
};

}  // namespace cdrs
