#include "magflow_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace magflow::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parseNumber(const std::string& raw, const std::string& what) {
  const std::string s = trim(raw);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size() || !std::isfinite(value))
    throw ConfigError("invalid number '" + s + "' in " + what);
  return value;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<double> parseList(const std::string& s, std::size_t n, const std::string& what) {
  const std::vector<std::string> parts = split(s, ',');
  if (parts.size() != n)
    throw ConfigError(what + " needs " + std::to_string(n) + " comma-separated values");
  std::vector<double> out;
  for (const std::string& p : parts) out.push_back(parseNumber(p, what));
  return out;
}

Bump parseBump(const std::string& s, const std::string& what) {
  const std::vector<double> v = parseList(s, 4, what);
  if (!(v[3] > 0.0)) throw ConfigError(what + ": radius must be positive");
  if (!(v[2] > 0.0)) throw ConfigError(what + ": centre must lie in the upper half-plane");
  return {v[0], {v[1], v[2]}, v[3]};
}

}  // namespace

SurfaceModel parseModel(const std::string& text) {
  double kappa = 0.0;
  std::vector<Bump> rho, kap;
  std::optional<double> period;
  bool sawKappa = false;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "line " + std::to_string(lineNo);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    if (key == "kappa") {
      if (sawKappa) throw ConfigError(where + ": kappa given twice");
      kappa = parseNumber(value, where);
      sawKappa = true;
    } else if (key == "rho_bump") {
      rho.push_back(parseBump(value, where));
    } else if (key == "kappa_bump") {
      kap.push_back(parseBump(value, where));
    } else if (key == "period") {
      if (period) throw ConfigError(where + ": period given twice");
      period = parseNumber(value, where);
      if (!(*period > 0.0)) throw ConfigError(where + ": period must be positive");
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  if (!(std::abs(kappa) < 1.0)) throw ConfigError("background field must satisfy |kappa| < 1");
  SurfaceModel model(kappa, std::move(rho), std::move(kap));
  return period ? model.withPeriod(*period) : model;
}

SurfaceModel loadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseModel(buf.str());
}

UnitVector parseVector(const std::string& text) {
  const std::vector<double> v = parseList(text, 3, "vector '" + text + "'");
  const UnitVector u{{v[0], v[1]}, v[2]};
  if (!(u.base.y > 0.0)) throw ConfigError("vector base point must satisfy y > 0");
  return u;
}

Mobius parseMobius(const std::string& text) {
  const std::vector<double> v = parseList(text, 4, "map '" + text + "'");
  const Mobius g{v[0], v[1], v[2], v[3]};
  if (!(g.a * g.d - g.b * g.c > 0.0)) throw ConfigError("map must have positive determinant");
  return g;
}

std::vector<Point> GridSpec::points() const {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  auto at = [](double a, double b, int n, int i) { return n == 1 ? a : a + (b - a) * i / (n - 1); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.push_back({at(x0, x1, nx, i), at(y0, y1, ny, j)});
  return out;
}

GridSpec parseGrid(const std::string& text) {
  const std::vector<std::string> axes = split(text, ',');
  if (axes.size() != 2) throw ConfigError("grid must be 'x0:x1:nx,y0:y1:ny'");
  GridSpec g;
  auto axis = [&](const std::string& s, double& a, double& b, int& n) {
    const std::vector<std::string> p = split(s, ':');
    if (p.size() != 3) throw ConfigError("grid axis must be 'start:end:count'");
    a = parseNumber(p[0], "grid");
    b = parseNumber(p[1], "grid");
    const double c = parseNumber(p[2], "grid");
    if (c < 1.0 || c != std::floor(c) || c > 1e6) throw ConfigError("grid count must be a positive integer");
    n = static_cast<int>(c);
  };
  axis(axes[0], g.x0, g.x1, g.nx);
  axis(axes[1], g.y0, g.y1, g.ny);
  if (!(std::min(g.y0, g.y1) > 0.0)) throw ConfigError("grid must lie in the upper half-plane");
  return g;
}

}  // namespace magflow::cli
