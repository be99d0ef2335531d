#pragma once

#include <string>
#include <vector>

#include "xferlens/json.hpp"

namespace xferlens {

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

/// Output of one analysis: scalar results, plot-ready tables and the
/// effective configuration that produced them.
struct AnalysisReport {
  static constexpr int kSchemaVersion = 1;

  std::string analysis;
  Json config = Json::object();
  Json results = Json::object();
  std::vector<ReportTable> tables;
};

enum class ReportFormat { json, csv };

/// Canonical JSON: sorted keys, floats with 12 significant digits.
std::string render_json(const AnalysisReport& report);
/// Tables with a header row each; scalar results as key,value rows when the
/// report has no tables.
std::string render_csv(const AnalysisReport& report);
std::string render_report(const AnalysisReport& report, ReportFormat format);

/// %.12g, with non-finite values spelled nan/inf/-inf.
std::string format_number(double v);

}  // namespace xferlens
