#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdrs/nn/types.hpp"

namespace cdrs::app {

/// A CSV file does not match the expected layout; `column()` names the culprit.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string column, const std::string& message)
      : std::runtime_error("column '" + column + "': " + message), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Accepted (or raw) samples at one conditioning label. Columns:
///   f0..f{d-1}, label, [predicted_label], [ratio], acceptance_index, actual_label, attribute
/// actual_label and attribute are oracle annotations from the synthetic generator.
struct SampleTable {
  Matrix x;  // d x n
  std::vector<double> labels;
  std::vector<double> predicted;  // empty when absent
  std::vector<double> ratios;     // empty when absent
  std::vector<std::size_t> acceptance_index;
  std::vector<double> actual_labels;
  std::vector<int> attributes;
  bool has_predicted = false;
  bool has_ratio = false;

  std::size_t size() const { return labels.size(); }
  std::vector<std::string> header() const;
};

void write_samples_csv(const std::filesystem::path& path, const SampleTable& table);
SampleTable read_samples_csv(const std::filesystem::path& path);

/// Plain numeric table with a header row.
void write_numeric_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

/// Writes `text` to `path`, replacing any existing file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cdrs::app
