#pragma once

// Deterministic CSV / JSON emission.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace magflow::cli {

using Json = nlohmann::ordered_json;

enum class Format { Csv, Json };

Format parseFormat(const std::string& name);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// 17 significant digits, '.' decimal separator.
std::string formatNumber(double x);

// Throws NumericError on a non-finite cell.
std::string toCsv(const Table& t);
// {"columns": [...], "rows": [[...], ...]}.
Json toJson(const Table& t);
// Flat objects become key,value rows; nested values are dumped as JSON text.
std::string toCsv(const Json& object);
std::string dumpJson(const Json& j);

std::string render(const Table& t, Format f);
std::string render(const Json& j, Format f);

// Empty path or "-" writes to standard output.
void writeOutput(const std::filesystem::path& path, const std::string& text);

}  // namespace magflow::cli
