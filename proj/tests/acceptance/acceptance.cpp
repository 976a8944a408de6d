// Acceptance run: one PASS/FAIL line per criterion.
//
// Criteria 1-9 come from the invariant suite, executed through the `verify`
// command; criterion 10 runs it a second time and compares the report bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "magflow_cli/commands.hpp"
#include "magflow_cli/output.hpp"

namespace fs = std::filesystem;
using magflow::cli::Json;

namespace {

const std::map<int, const char*> kNames = {
    {1, "constant-model closed forms"},
    {2, "symplectic identity and gap bounds"},
    {3, "Jacobi field bound"},
    {4, "transfer reciprocity, cocycle, horizon stability"},
    {5, "linearization contract"},
    {6, "derivative identity and positive Jacobian"},
    {7, "scaling identity on quotients"},
    {8, "Lyapunov constancy along centre-stable sets"},
    {9, "horocyclic transport decay"},
    {10, "verify determinism"},
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int verify(const fs::path& out) {
  return magflow::cli::run({"magflow", "verify", "--out", out.string(), "--format", "json"});
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "magflow_acceptance";
  fs::create_directories(dir);
  const fs::path first = dir / "report_a.json", second = dir / "report_b.json";

  const int rc1 = verify(first);
  const int rc2 = verify(second);
  const std::string a = slurp(first), b = slurp(second);

  std::map<int, bool> pass;
  std::map<int, int> count;
  if (!a.empty()) {
    const Json report = Json::parse(a);
    for (const Json& row : report.at("rows")) {
      const int c = row.at("criterion").get<int>();
      pass.try_emplace(c, true);
      pass[c] = pass[c] && row.at("pass").get<bool>();
      ++count[c];
    }
  }
  pass[10] = rc1 != 2 && rc1 != 3 && rc2 == rc1 && !a.empty() && a == b;
  count[10] = 1;

  std::printf("\n");
  int failures = 0;
  for (const auto& [c, name] : kNames) {
    const bool ok = count[c] > 0 && pass[c];
    failures += ok ? 0 : 1;
    std::printf("criterion %2d  %-50s %s (%d checks)\n", c, name, ok ? "PASS" : "FAIL", count[c]);
  }
  std::printf("%s\n", failures == 0 ? "acceptance: all criteria pass" : "acceptance: failures");
  fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
