#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cdrs/metrics/report.hpp"
#include "cdrs/numfmt.hpp"

using namespace cdrs;
using namespace cdrs::metrics;

namespace {

EvaluationReport sample_report() {
  EvaluationReport r;
  r.per_label.push_back({0.0, 1.5, 1.2, 0.05, 0.4, true, ""});
  r.per_label.push_back({1.0, 0.5, 1.4, 0.07, 0.2, true, ""});
  r.per_label.push_back({2.0, std::nan(""), 0.0, 0.0, 0.1, false, "insufficient samples, 1"});
  r.recompute_aggregate();
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("report CSV has one row per label and a mean/sd footer") {
  std::ostringstream out;
  write_report_csv(sample_report(), out);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "label,fid,diversity,label_score,acceptance_rate,status");
  CHECK(lines[1] == "0,1.5,1.2,0.05,0.4,ok");
  CHECK(lines[3] == "2,nan,0,0,0.1,insufficient samples; 1");
  CHECK(lines[4] == "mean,1," + format_double((1.2 + 1.4) / 2) + "," +
                        format_double((0.05 + 0.07) / 2) + "," + format_double((0.4 + 0.2) / 2) +
                        ",aggregate");
  CHECK(lines[5].rfind("sd,0.5,", 0) == 0);
}

TEST_CASE("report JSON mirrors the rows and aggregates") {
  const auto j = report_to_json(sample_report());
  CHECK(j["per_label"].size() == 3);
  CHECK(j["valid_labels"] == 2);
  CHECK(j["per_label"][2]["fid"].is_null());
  CHECK(j["per_label"][2]["valid"] == false);
  CHECK(j["aggregate"]["fid"]["mean"] == 1.0);
  CHECK(j["aggregate"]["fid"]["sd"] == 0.5);
}

TEST_CASE("comparison table columns and a self-comparison with zero deltas") {
  const auto r = sample_report();
  std::ostringstream out;
  write_comparison_csv(r, r, out);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "method,fid,diversity,label_score,acceptance_rate");
  CHECK(lines[1].rfind("baseline,", 0) == 0);
  CHECK(lines[2].rfind("subsampled,", 0) == 0);
  CHECK(lines[3] == "delta,0,0,0,0");
  const auto j = comparison_to_json(r, r);
  for (const auto& column : kMetricColumns) CHECK(j["delta"][column] == 0.0);
}

TEST_CASE("numbers print as shortest round-trip decimals") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e17}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}
