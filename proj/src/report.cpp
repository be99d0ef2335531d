#include "xferlens/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace xferlens {
namespace {

void write_canonical(const Json& v, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      std::map<std::string, const Json*> sorted;
      for (const auto& [k, x] : v.items()) sorted.emplace(k, &x);
      out += "{\n";
      bool first = true;
      for (const auto& [k, x] : sorted) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(k).dump() + ": ";
        write_canonical(*x, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        write_canonical(v[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_number(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

std::string csv_cell(const Json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  if (v.is_null()) return "";
  return v.dump();
}

void flatten(const std::string& prefix, const Json& v, std::vector<std::pair<std::string, const Json*>>& out) {
  if (v.is_object()) {
    std::map<std::string, const Json*> sorted;
    for (const auto& [k, x] : v.items()) sorted.emplace(k, &x);
    for (const auto& [k, x] : sorted) flatten(prefix.empty() ? k : prefix + "." + k, *x, out);
  } else {
    out.emplace_back(prefix, &v);
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string render_json(const AnalysisReport& report) {
  Json doc = Json::object();
  doc["schema_version"] = AnalysisReport::kSchemaVersion;
  doc["analysis"] = report.analysis;
  doc["config"] = report.config;
  doc["results"] = report.results;
  Json tables = Json::object();
  for (const auto& t : report.tables) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
      Json row = Json::object();
      for (std::size_t c = 0; c < t.columns.size() && c < r.size(); ++c) row[t.columns[c]] = r[c];
      rows.push_back(std::move(row));
    }
    tables[t.name] = std::move(rows);
  }
  doc["tables"] = std::move(tables);
  std::string out;
  write_canonical(doc, out, 0);
  out += "\n";
  return out;
}

std::string render_csv(const AnalysisReport& report) {
  std::string out;
  if (report.tables.empty()) {
    std::vector<std::pair<std::string, const Json*>> flat;
    flatten("", report.results, flat);
    out += "key,value\n";
    for (const auto& [k, v] : flat) out += csv_cell(Json(k)) + "," + csv_cell(*v) + "\n";
    return out;
  }
  const bool sectioned = report.tables.size() > 1;
  for (std::size_t i = 0; i < report.tables.size(); ++i) {
    const auto& t = report.tables[i];
    if (sectioned) out += (i ? "\n# " : "# ") + t.name + "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + csv_cell(Json(t.columns[c]));
    out += "\n";
    for (const auto& r : t.rows) {
      for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + csv_cell(r[c]);
      out += "\n";
    }
  }
  return out;
}

std::string render_report(const AnalysisReport& report, ReportFormat format) {
  return format == ReportFormat::json ? render_json(report) : render_csv(report);
}

}  // namespace xferlens
