#include "cdrs/generator.hpp"

#include "cdrs/error.hpp"

namespace cdrs {

SampleBatch SampleBatch::subset(const std::vector<std::size_t>& indices) const {
  SampleBatch out;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(indices.size()));
  out.actual_labels.reserve(indices.size());
  out.attributes.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t i = indices[j];
    require(i < size(), "SampleBatch::subset: index out of range");
    out.x.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(i));
    out.actual_labels.push_back(actual_labels[i]);
    out.attributes.push_back(attributes[i]);
  }
  return out;
}

void SampleBatch::append(const SampleBatch& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  require(x.rows() == other.x.rows(), "SampleBatch::append: dimension mismatch");
  Matrix joined(x.rows(), x.cols() + other.x.cols());
  joined << x, other.x;
  x = std::move(joined);
  actual_labels.insert(actual_labels.end(), other.actual_labels.begin(), other.actual_labels.end());
  attributes.insert(attributes.end(), other.attributes.begin(), other.attributes.end());
}

}  // namespace cdrs
