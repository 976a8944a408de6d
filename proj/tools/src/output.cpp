#include "magflow_cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "magflow/errors.hpp"

namespace magflow::cli {

Format parseFormat(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw ConfigError("format must be csv or json");
}

std::string formatNumber(double x) {
  if (!std::isfinite(x)) throw NumericError("non-finite value in output");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string toCsv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + formatNumber(row[i]);
    out += '\n';
  }
  return out;
}

Json toJson(const Table& t) {
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json r = Json::array();
    for (double x : row) {
      if (!std::isfinite(x)) throw NumericError("non-finite value in output");
      r.push_back(x);
    }
    rows.push_back(std::move(r));
  }
  return Json{{"columns", t.columns}, {"rows", std::move(rows)}};
}

std::string toCsv(const Json& object) {
  std::string out = "key,value\n";
  for (const auto& [key, value] : object.items()) {
    out += key + ',';
    if (value.is_number_float())
      out += formatNumber(value.get<double>());
    else if (value.is_string())
      out += value.get<std::string>();
    else
      out += '"' + value.dump() + '"';
    out += '\n';
  }
  return out;
}

std::string dumpJson(const Json& j) { return j.dump(2) + "\n"; }

std::string render(const Table& t, Format f) { return f == Format::Csv ? toCsv(t) : dumpJson(toJson(t)); }

std::string render(const Json& j, Format f) { return f == Format::Csv ? toCsv(j) : dumpJson(j); }

void writeOutput(const std::filesystem::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace magflow::cli
