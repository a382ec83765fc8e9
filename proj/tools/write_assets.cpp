// Regenerates assets/scenarios/ct_default.json and ct_fast.json from the
// built-in scenario. Usage: write_assets <output-dir>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rehearsal/scenario.hpp"

namespace {

bool write(const std::filesystem::path& path, const rehearsal::Scenario& scenario) {
  std::ofstream out(path, std::ios::binary);
  out << rehearsal::serialize_scenario(scenario);
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: write_assets <output-dir>\n");
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const auto base = rehearsal::canonical_default_scenario();
  auto fast = rehearsal::scale_scenario(base, 10);
  fast.id = "ct_fast";
  if (!write(dir / "ct_default.json", base) || !write(dir / "ct_fast.json", fast)) {
    std::fprintf(stderr, "write_assets: cannot write to %s\n", dir.c_str());
    return 2;
  }
  return 0;
}
