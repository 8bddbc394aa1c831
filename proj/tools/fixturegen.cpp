// Regenerates the scenario fixtures from the built-in scenario definitions.
// usage: fixturegen <fixtures-dir>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "planverify.hpp"

namespace pv = planverify;

static void write(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << content;
  std::cout << "wrote " << path.string() << "\n";
}

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fixturegen <fixtures-dir>\n";
    return 1;
  }
  std::filesystem::path root = argv[1];
  write(root / "scenario/prompt.txt", pv::scenario::kPrompt);
  write(root / "scenario/rules.json", pv::rules_to_json(pv::scenario::rules()).dump(2) + "\n");
  auto half = pv::scenario::rules();
  half[3].strictness = pv::StrictnessWeight(0.5);
  write(root / "scenario/rules_r4_soft.json", pv::rules_to_json(half).dump(2) + "\n");
  write(root / "scenario/solution.plan", pv::scenario::kSolutionPlan);
  write(root / "scenario/p2_first.plan", pv::scenario::kP2FirstPlan);
  using pv::scenario::Script;
  write(root / "mock/success.json", pv::mock_script_to_json(pv::scenario::script(Script::Success)).dump(2) + "\n");
  write(root / "mock/failure.json", pv::mock_script_to_json(pv::scenario::script(Script::Failure)).dump(2) + "\n");
  return 0;
}
