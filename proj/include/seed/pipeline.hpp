#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "seed/matcher.hpp"
#include "seed/params.hpp"
#include "seed/scene.hpp"

namespace seed {

// Full head configuration. Map height/width are optional expectations checked
// against the scene; channels must match the scene because parameter shapes
// depend on it.
struct RunConfig {
  ModelShape shape;
  int expect_height = 0;  // 0 = take from scene
  int expect_width = 0;
  double expect_cell_size = 0.0;  // 0 = take from scene
  DqsConfig dqs;
  CostWeights match;
  Extent extent;
  bool use_oracle_scores = true;
  bool save_attention = true;
  double init_box_l = 2.0;  // reference box attached to coarse queries
  double init_box_w = 2.0;
  double init_box_h = 2.0;
  std::uint64_t param_seed = 0;
  std::string manifest_path;  // empty = deterministic-seed initialization

  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_json_file(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& config);

struct StageTimings {
  double scores_ms = 0.0;
  double foreground_ms = 0.0;
  double dqs_layer_ms = 0.0;
  double quality_ms = 0.0;
  double decoder_ms = 0.0;
  double matching_ms = 0.0;
  double total_ms = 0.0;
};

struct MetricsReport {
  double dqs_recall = 0.0;       // gt center cells covered by coarse queries
  double fine_recall = 0.0;      // gts that are the nearest gt of some fine box
  double matched_cost_mean = 0.0;
  int n_c = 0;
  int n_f_effective = 0;
  StageTimings timings;
};

struct PipelineResult {
  QuerySet detections;        // final boxes with cls/loc/fused scores
  QuerySet dqs_proposals;     // coarse proposals (S_c, S_l, B_c) after the DQS layer
  Assignment assignment;      // detections vs ground truth
  Assignment dqs_assignment;  // DQS proposals vs ground truth
  DqsLossValues losses;
  MetricsReport metrics;
  std::vector<DgaTrace> decoder_traces;  // one per decoder layer
};

PipelineResult run_pipeline(const RunConfig& config, const Scene& scene,
                            const PipelineParams& params);

// Report serialization; timings live under /timings_ms so determinism checks
// can strip them.
nlohmann::json report_to_json(const RunConfig& config, const Scene& scene,
                              const PipelineResult& result, const std::string& scene_dir);
// Structural check mirroring docs/report_schema.json; throws validation_error.
void validate_report_json(const nlohmann::json& report);

// Builds params per config, runs, writes report.json plus BEVT1 artifacts
// (final boxes/scores and per-layer attention traces) into out_dir.
PipelineResult run_and_save(const RunConfig& config, const Scene& scene,
                            const std::string& scene_dir, const std::string& out_dir);

// Renders one query's sampling positions at one decoder layer, splatted by
// attention weight over the scene's BEV map, as a P5 PGM.
void dump_attention(const std::string& run_dir, int query_index, int layer_index,
                    const std::string& out_path);

}  // namespace seed
