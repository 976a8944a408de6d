#include "magflow_cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>

#include "magflow/parallel.hpp"
#include "magflow/spectrum.hpp"
#include "magflow/transfer.hpp"
#include "magflow_cli/config.hpp"
#include "magflow_cli/output.hpp"
#include "magflow_cli/suite.hpp"

namespace magflow::cli {

namespace {

struct Options {
  std::string model, model2, v, vprime, grid, out, format, map, criteria;
  double t = 0.0, tol = 1e-8, ell = 0.0, extent = 0.0;
  std::optional<double> horizon;
  int samples = 101;
};

Json number(double x) {
  if (!std::isfinite(x)) throw NumericError("non-finite value in output");
  return x;
}

Json vectorJson(const UnitVector& v) { return Json::array({number(v.base.x), number(v.base.y), number(v.angle)}); }

Json pointJson(Point p) { return Json::array({number(p.x), number(p.y)}); }

Format formatOr(const Options& o, Format fallback) {
  return o.format.empty() ? fallback : parseFormat(o.format);
}

void emit(const Options& o, const Table& t) { writeOutput(o.out, render(t, formatOr(o, Format::Csv))); }

void emit(const Options& o, const Json& j) { writeOutput(o.out, render(j, formatOr(o, Format::Json))); }

SurfaceModel model(const Options& o) {
  if (o.model.empty()) throw ConfigError("--model is required");
  return loadModel(o.model);
}

UnitVector baseVector(const Options& o) {
  if (o.v.empty()) throw ConfigError("--v is required");
  return parseVector(o.v);
}

// "x,y" selects the asymptotic vector at that point; "x,y,angle" is taken as is.
UnitVector secondVector(const Options& o, const AsymptoticField& field) {
  if (o.vprime.empty()) throw ConfigError("--vprime is required");
  if (std::count(o.vprime.begin(), o.vprime.end(), ',') == 1) {
    const UnitVector p = parseVector(o.vprime + ",0");
    return field.at(p.base);
  }
  return parseVector(o.vprime);
}

std::vector<Point> gridPoints(const Options& o) {
  if (o.grid.empty()) throw ConfigError("--grid is required");
  return parseGrid(o.grid).points();
}

int cmdOrbit(const Options& o) {
  const SurfaceModel m = model(o);
  const UnitVector v = baseVector(o);
  if (o.samples < 2) throw ConfigError("--samples must be at least 2");
  const Orbit orbit = integrateFlow(m, v, std::min(0.0, o.t), std::max(0.0, o.t), 1e-10);
  if (!orbit.covers(o.t)) throw DomainError("orbit left the chart before t");
  Table table{{"t", "x", "y", "angle", "kappa"}, {}};
  for (int i = 0; i < o.samples; ++i) {
    const double t = o.t * i / (o.samples - 1);
    const UnitVector u = orbit.at(t);
    table.rows.push_back({t, u.base.x, u.base.y, u.angle, m.kappa(u.base)});
  }
  emit(o, table);
  return kExitOk;
}

int cmdStability(const Options& o) {
  const SurfaceModel m = model(o);
  const UnitVector v = baseVector(o);
  const StabilityData d = stabilityData(m, v, o.tol);
  const ModelBounds& b = m.bounds();
  emit(o, Json{{"v", vectorJson(v)},
               {"uMinus", number(d.uMinus)},
               {"uPlus", number(d.uPlus)},
               {"wMinus", number(d.wMinus)},
               {"wPlus", number(d.wPlus)},
               {"horizon", number(d.horizon)},
               {"errorEstimate", number(d.errorEstimate)},
               {"q0", number(b.q0)},
               {"q1", number(b.q1)}});
  return kExitOk;
}

int cmdHorocycle(const Options& o) {
  const SurfaceModel m = model(o);
  const UnitVector v = baseVector(o);
  HorocycleOptions hopt;
  hopt.tol = o.tol;
  const HorocycleCurve c = traceHorocycle(m, v, o.extent > 0.0 ? o.extent : 1.0, hopt);
  Table table{{"s", "x", "y", "angle", "wMinus", "kappaMinus", "busemannResidual", "arcLength"}, {}};
  for (const HorocycleNode& n : c.nodes())
    table.rows.push_back({n.s, n.point.x, n.point.y, n.angle, n.wMinus, n.kappaMinus,
                          n.busemannResidual, n.arcLength});
  emit(o, table);
  return kExitOk;
}

int cmdBusemann(const Options& o) {
  const SurfaceModel m = model(o);
  const UnitVector v = baseVector(o);
  const std::vector<Point> grid = gridPoints(o);
  const BusemannFunction b(m, v, std::min(o.tol, 1e-8));
  std::vector<double> values(grid.size());
  parallelFor(grid.size(), [&](std::size_t i) { values[i] = b(grid[i]); });
  Table table{{"px", "py", "busemann"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i) table.rows.push_back({grid[i].x, grid[i].y, values[i]});
  emit(o, table);
  return kExitOk;
}

Json transferJson(const TransferValue& x) {
  Json j{{"value", number(x.value)},
         {"logValue", number(x.logValue)},
         {"horizon", number(x.horizon)},
         {"error", number(x.error)},
         {"flagged", x.flagged}};
  if (std::isfinite(x.crossCheck)) j["crossCheck"] = x.crossCheck;
  return j;
}

int cmdTransfer(const Options& o) {
  const SurfaceModel m = model(o);
  const UnitVector v = baseVector(o);
  const StableTransferContext ctx(m, v, o.tol);
  const UnitVector vp = secondVector(o, ctx.field());
  TransferOptions topt;
  topt.tol = o.tol;
  topt.horizon = o.horizon;
  const TransferValue st = ctx(vp, std::nullopt, topt);
  const TransferValue un = unstableTransfer(m, v, vp, o.tol);
  emit(o, Json{{"v", vectorJson(v)},
               {"vprime", vectorJson(vp)},
               {"offset", number(st.offset)},
               {"stable", transferJson(st)},
               {"unstable", transferJson(un)}});
  return kExitOk;
}

int cmdLinearize(const Options& o) {
  const SurfaceModel m = model(o);
  const UnitVector v = baseVector(o);
  const std::vector<Point> grid = gridPoints(o);
  LinearizationOptions lopt;
  lopt.tol = o.tol;
  if (o.extent > 0.0) lopt.extent = o.extent;
  const Linearization lin(m, v, lopt);
  std::vector<LinearizationSample> e(grid.size());
  parallelFor(grid.size(), [&](std::size_t i) { e[i] = lin(grid[i]); });
  Table table{{"px", "py", "E_long", "E_trans", "err"}, {}};
  for (const LinearizationSample& s : e)
    table.rows.push_back({s.p.x, s.p.y, s.longitudinal, s.transverse, s.error});
  emit(o, table);
  return kExitOk;
}

int cmdMatch(const Options& o) {
  const SurfaceModel m1 = model(o);
  if (o.model2.empty()) throw ConfigError("--model2 is required");
  const SurfaceModel m2 = loadModel(o.model2);
  const UnitVector v1 = baseVector(o);
  const Mobius g = o.map.empty() ? Mobius{} : parseMobius(o.map);
  const UnitVector v2 = o.vprime.empty() ? g.apply(v1) : parseVector(o.vprime);
  const std::vector<Point> grid = gridPoints(o);
  LinearizationOptions lopt;
  lopt.tol = o.tol;
  if (o.extent > 0.0) lopt.extent = o.extent;
  const MatchReport r =
      linearizationMatch(m1, m2, [&](Point p) { return g.apply(p); }, v1, v2, grid, lopt);
  emit(o, Json{{"grid", o.grid},
               {"gridSize", r.gridSize},
               {"supResidual", number(r.supResidual)},
               {"argmaxPoint", pointJson(r.argmaxPoint)}});
  return kExitOk;
}

int cmdPeriodic(const Options& o) {
  const SurfaceModel m = model(o);
  if (!(o.ell > 0.0)) throw ConfigError("--ell must be positive");
  const CyclicQuotient q(m, o.ell);
  const PeriodicOrbit orbit = findPeriodicOrbit(q, std::min(o.tol, 1e-10));
  const LyapunovData l = periodicLyapunov(q, orbit, std::min(o.tol, 1e-10));
  emit(o, Json{{"ell", number(o.ell)},
               {"kappaSpec", m.describe()},
               {"T", number(orbit.period)},
               {"offset", number(orbit.offset)},
               {"angleShift", number(orbit.angleShift)},
               {"v", vectorJson(orbit.v)},
               {"lambdaMinus", number(l.lambdaMinus)},
               {"lambdaPlus", number(l.lambdaPlus)},
               {"multiplier", number(l.multiplier)},
               {"multiplierPlus", number(l.multiplierPlus)},
               {"residual", number(orbit.residual)}});
  return kExitOk;
}

std::vector<int> parseCriteria(const std::string& s) {
  std::vector<int> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    int c = 0;
    try {
      std::size_t used = 0;
      c = std::stoi(item, &used);
      if (used != item.size()) c = 0;
    } catch (const std::exception&) {
      c = 0;
    }
    if (c < 1 || c > 9) throw ConfigError("criteria must be comma-separated integers 1-9");
    out.push_back(c);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmdVerify(const Options& o) {
  SuiteOptions sopt;
  if (!o.model.empty()) sopt.constantModel = loadModel(o.model);
  sopt.criteria = parseCriteria(o.criteria);
  const std::vector<SuiteRow> rows =
      runSuite(sopt, [](const SuiteRow& r) { std::cout << suiteText({r}) << std::flush; });
  const bool pass = allPass(rows);
  std::cout << (pass ? "all checks passed\n" : "some checks failed\n");
  if (!o.out.empty()) {
    const Format f = formatOr(o, Format::Json);
    writeOutput(o.out, f == Format::Json ? dumpJson(suiteJson(rows)) : suiteCsv(rows));
  }
  return pass ? kExitOk : kExitSuite;
}

void reportError(const char* kind, const std::string& message, int code) {
  const Json j{{"error", kind}, {"message", message}, {"exitCode", code}};
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Magnetic flows on negatively curved surfaces"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--model", o.model, "model file");
    c->add_option("--tol", o.tol, "tolerance")->check(CLI::PositiveNumber);
    c->add_option("--out", o.out, "output file ('-' or empty for standard output)");
    c->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto vec = [&](CLI::App* c) { c->add_option("--v", o.v, "unit vector x,y,angle"); };

  CLI::App* orbit = app.add_subcommand("orbit", "integrate the flow; CSV of the orbit");
  common(orbit);
  vec(orbit);
  orbit->add_option("--t", o.t, "final time")->required();
  orbit->add_option("--samples", o.samples, "number of output rows");

  CLI::App* stability = app.add_subcommand("stability", "Riccati data at a vector; JSON");
  common(stability);
  vec(stability);

  CLI::App* horocycle = app.add_subcommand("horocycle", "trace the stable horocycle; CSV");
  common(horocycle);
  vec(horocycle);
  horocycle->add_option("--S", o.extent, "parameter extent [-S, S]");

  CLI::App* busemann = app.add_subcommand("busemann", "Busemann function on a grid; CSV");
  common(busemann);
  vec(busemann);
  busemann->add_option("--grid", o.grid, "x0:x1:nx,y0:y1:ny");

  CLI::App* transfer = app.add_subcommand("transfer", "stable and unstable transfer; JSON");
  common(transfer);
  vec(transfer);
  transfer->add_option("--vprime", o.vprime, "x,y,angle, or x,y for the asymptotic vector there");
  transfer->add_option("--horizon", o.horizon, "read the ratio at this time");

  CLI::App* linearize = app.add_subcommand("linearize", "linearization on a grid; CSV");
  common(linearize);
  vec(linearize);
  linearize->add_option("--grid", o.grid, "x0:x1:nx,y0:y1:ny");
  linearize->add_option("--S", o.extent, "traced horocycle extent");

  CLI::App* match = app.add_subcommand("match", "compare two linearizations under a map; JSON");
  common(match);
  vec(match);
  match->add_option("--model2", o.model2, "second model file");
  match->add_option("--vprime", o.vprime, "vector of the second model (default: image of --v)");
  match->add_option("--map", o.map, "Mobius map a,b,c,d (default identity)");
  match->add_option("--grid", o.grid, "x0:x1:nx,y0:y1:ny");
  match->add_option("--S", o.extent, "traced horocycle extent");

  CLI::App* periodic = app.add_subcommand("periodic", "periodic orbit on a cyclic quotient; JSON");
  common(periodic);
  periodic->add_option("--ell", o.ell, "translation length of the generator")->required();

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  common(verify);
  verify->add_option("--criteria", o.criteria, "comma-separated subset of 1-9");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    reportError("config", e.what(), kExitConfig);
    return kExitConfig;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "orbit") return cmdOrbit(o);
    if (name == "stability") return cmdStability(o);
    if (name == "horocycle") return cmdHorocycle(o);
    if (name == "busemann") return cmdBusemann(o);
    if (name == "transfer") return cmdTransfer(o);
    if (name == "linearize") return cmdLinearize(o);
    if (name == "match") return cmdMatch(o);
    if (name == "periodic") return cmdPeriodic(o);
    return cmdVerify(o);
  } catch (const ConfigError& e) {
    reportError(e.kind(), e.what(), kExitConfig);
    return kExitConfig;
  } catch (const PreconditionError& e) {
    reportError(e.kind(), e.what(), kExitConfig);
    return kExitConfig;
  } catch (const Error& e) {
    reportError(e.kind(), e.what(), kExitNumeric);
    return kExitNumeric;
  } catch (const std::exception& e) {
    reportError("internal", e.what(), kExitNumeric);
    return kExitNumeric;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (std::string& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace magflow::cli
