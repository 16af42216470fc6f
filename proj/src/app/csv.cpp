#include "cdrs/app/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cdrs/error.hpp"
#include "cdrs/numfmt.hpp"

namespace cdrs::app {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::vector<std::string> SampleTable::header() const {
  std::vector<std::string> h;
  for (Eigen::Index k = 0; k < x.rows(); ++k) h.push_back("f" + std::to_string(k));
  h.push_back("label");
  if (has_predicted) h.push_back("predicted_label");
  if (has_ratio) h.push_back("ratio");
  h.push_back("acceptance_index");
  h.push_back("actual_label");
  h.push_back("attribute");
  return h;
}

void write_samples_csv(const std::filesystem::path& path, const SampleTable& t) {
  const std::size_t n = t.size();
  require(static_cast<std::size_t>(t.x.cols()) == n && t.acceptance_index.size() == n &&
              t.actual_labels.size() == n && t.attributes.size() == n &&
              (!t.has_predicted || t.predicted.size() == n) &&
              (!t.has_ratio || t.ratios.size() == n),
          "write_samples_csv: column lengths disagree");
  auto out = open_for_write(path);
  const auto header = t.header();
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 0; k < t.x.rows(); ++k) out << format_double(t.x(k, col)) << ',';
    out << format_double(t.labels[i]) << ',';
    if (t.has_predicted) out << format_double(t.predicted[i]) << ',';
    if (t.has_ratio) out << format_double(t.ratios[i]) << ',';
    out << t.acceptance_index[i] << ',' << format_double(t.actual_labels[i]) << ','
        << t.attributes[i] << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

SampleTable read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("header", "file is empty");
  const auto header = split(line);

  SampleTable t;
  int dim = 0;
  while (dim < static_cast<int>(header.size()) && header[dim] == "f" + std::to_string(dim)) ++dim;
  if (dim == 0) throw SchemaError("f0", "missing feature columns");
  std::size_t pos = static_cast<std::size_t>(dim);
  auto expect = [&](const std::string& name) {
    if (pos >= header.size() || header[pos] != name) {
      throw SchemaError(name, "expected at position " + std::to_string(pos) + " in '" +
                                  path.filename().string() + "'");
    }
    ++pos;
  };
  expect("label");
  if (pos < header.size() && header[pos] == "predicted_label") {
    t.has_predicted = true;
    ++pos;
  }
  if (pos < header.size() && header[pos] == "ratio") {
    t.has_ratio = true;
    ++pos;
  }
  expect("acceptance_index");
  expect("actual_label");
  expect("attribute");
  if (pos != header.size()) throw SchemaError(header[pos], "unexpected column");

  std::vector<std::vector<double>> features(static_cast<std::size_t>(dim));
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw SchemaError(cells.size() < header.size() ? header[cells.size()] : "<extra>",
                        "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
    }
    auto num = [&](std::size_t k) {
      try {
        return parse_double(cells[k]);
      } catch (const std::invalid_argument&) {
        throw SchemaError(header[k], "row " + std::to_string(row) + ": not a number");
      }
    };
    auto integer = [&](std::size_t k) {
      long long v = 0;
      const auto& c = cells[k];
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size() || v < 0) {
        throw SchemaError(header[k], "row " + std::to_string(row) + ": not a nonnegative integer");
      }
      return v;
    };
    std::size_t k = 0;
    for (int f = 0; f < dim; ++f) features[static_cast<std::size_t>(f)].push_back(num(k++));
    t.labels.push_back(num(k++));
    if (t.has_predicted) t.predicted.push_back(num(k++));
    if (t.has_ratio) t.ratios.push_back(num(k++));
    t.acceptance_index.push_back(static_cast<std::size_t>(integer(k++)));
    t.actual_labels.push_back(num(k++));
    t.attributes.push_back(static_cast<int>(integer(k++)));
  }
  t.x.resize(dim, static_cast<Eigen::Index>(t.labels.size()));
  for (int f = 0; f < dim; ++f) {
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
      t.x(f, static_cast<Eigen::Index>(i)) = features[static_cast<std::size_t>(f)][i];
    }
  }
  return t;
}

void write_numeric_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
  require(header.size() == columns.size(), "write_numeric_csv: header/column count mismatch");
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) require(c.size() == n, "write_numeric_csv: ragged columns");
  auto out = open_for_write(path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      out << (k ? "," : "") << format_double(columns[k][i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace cdrs::app
