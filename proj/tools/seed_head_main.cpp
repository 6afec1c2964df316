#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seed/error.hpp"
#include "seed/oracles.hpp"
#include "seed/pipeline.hpp"
#include "seed/scene.hpp"

namespace {

int run_gen_scene(const std::string& spec_path, const std::string& out_dir) {
  const seed::SceneSpec spec = seed::scene_spec_from_json_file(spec_path);
  const seed::Scene scene = seed::gen_scene(spec);
  seed::save_scene(scene, spec, out_dir);
  std::cout << "scene: " << scene.gt_boxes.size() << " objects, " << spec.map_height << "x"
            << spec.map_width << "x" << spec.map_channels << " map -> " << out_dir << "\n";
  return 0;
}

int run_run(const std::string& config_path, const std::string& scene_dir,
            const std::string& out_dir) {
  const seed::RunConfig config = seed::run_config_from_json_file(config_path);
  const seed::Scene scene = seed::load_scene(scene_dir);
  const seed::PipelineResult result = seed::run_and_save(config, scene, scene_dir, out_dir);
  std::cout << "run: n_c=" << result.metrics.n_c
            << " n_f=" << result.metrics.n_f_effective
            << " dqs_recall=" << result.metrics.dqs_recall
            << " fine_recall=" << result.metrics.fine_recall
            << " bce=" << result.losses.bce_cls << " -> " << out_dir << "\n";
  return 0;
}

int run_check_oracles(std::uint64_t seed_value, int trials, bool inject_bug) {
  const seed::OracleReport report = seed::run_oracle_suites(seed_value, trials, inject_bug);
  nlohmann::json j;
  j["suites"] = nlohmann::json::array();
  for (const auto& suite : report.suites) {
    j["suites"].push_back({{"name", suite.name},
                           {"cases", suite.cases},
                           {"failures", suite.failures},
                           {"max_error", suite.max_error}});
    std::cout << (suite.failures == 0 ? "PASS " : "FAIL ") << suite.name << ": "
              << suite.cases << " cases, " << suite.failures << " failures, max err "
              << suite.max_error << "\n";
  }
  j["passed"] = report.passed();
  std::cout << j.dump() << "\n";
  return report.passed() ? 0 : 2;
}

int run_dump_attention(const std::string& run_dir, int query, int layer,
                       const std::string& out_path) {
  seed::dump_attention(run_dir, query, layer, out_path);
  std::cout << "attention map -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BEV detection head harness: dual query selection, deformable grid "
               "attention, quality-aware Hungarian matching"};
  app.require_subcommand(1);

  std::string spec_path, scene_dir, config_path, out_dir, run_dir, out_path;
  std::uint64_t seed_value = 0;
  int trials = 100;
  int query = 0, layer = 0;
  bool inject_bug = false;

  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic BEV scene");
  gen->add_option("--spec", spec_path, "Scene spec JSON")->required();
  gen->add_option("--out", out_dir, "Output scene directory")->required();

  auto* run = app.add_subcommand("run", "Run the detection head on a scene");
  run->add_option("--config", config_path, "Run config JSON")->required();
  run->add_option("--scene", scene_dir, "Scene directory")->required();
  run->add_option("--out", out_dir, "Output run directory")->required();

  auto* check = app.add_subcommand("check-oracles", "Run the derived-oracle suites");
  check->add_option("--seed", seed_value, "RNG seed");
  check->add_option("--trials", trials, "Trial multiplier")->check(CLI::PositiveNumber);
  check->add_flag("--inject-bug", inject_bug, "Corrupt one comparison (self-test hook)")
      ->group("");

  auto* dump = app.add_subcommand("dump-attention", "Render one query's attention map");
  dump->add_option("--run", run_dir, "Run directory")->required();
  dump->add_option("--query", query, "Query index")->required();
  dump->add_option("--layer", layer, "Decoder layer index")->required();
  dump->add_option("--out", out_path, "Output PGM path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_scene(spec_path, out_dir);
    if (run->parsed()) return run_run(config_path, scene_dir, out_dir);
    if (check->parsed()) return run_check_oracles(seed_value, trials, inject_bug);
    if (dump->parsed()) return run_dump_attention(run_dir, query, layer, out_path);
  } catch (const seed::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
