#include "seed/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "seed/error.hpp"
#include "seed/pgm.hpp"
#include "seed/tensor_io.hpp"

namespace seed {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double require_number(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw validation_error(pointer + ": expected number");
  return j.get<double>();
}

int require_int(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) throw validation_error(pointer + ": expected integer");
  return j.get<int>();
}

}  // namespace

void RunConfig::validate() const {
  shape.validate();
  dqs.validate();
  match.validate();
  extent.validate();
  if (expect_height < 0 || expect_width < 0) {
    throw validation_error("RunConfig: map expectations must be nonnegative");
  }
  if (!(init_box_l > 0.0 && init_box_w > 0.0 && init_box_h > 0.0)) {
    throw validation_error("RunConfig: init box sizes must be positive");
  }
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  if (!j.is_object()) throw validation_error("/: expected object");

  if (j.contains("map")) {
    const json& m = j["map"];
    if (!m.is_object()) throw validation_error("/map: expected object");
    if (!m.contains("channels")) throw validation_error("/map/channels: required");
    cfg.shape.channels = require_int(m["channels"], "/map/channels");
    if (m.contains("height")) cfg.expect_height = require_int(m["height"], "/map/height");
    if (m.contains("width")) cfg.expect_width = require_int(m["width"], "/map/width");
    if (m.contains("cell_size")) {
      cfg.expect_cell_size = require_number(m["cell_size"], "/map/cell_size");
      if (!(cfg.expect_cell_size > 0.0)) {
        throw validation_error("/map/cell_size: must be positive");
      }
    }
  } else {
    throw validation_error("/map: required");
  }

  if (j.contains("dqs")) {
    const json& d = j["dqs"];
    if (!d.is_object()) throw validation_error("/dqs: expected object");
    if (d.contains("r")) cfg.dqs.foreground_ratio = require_number(d["r"], "/dqs/r");
    if (d.contains("n_f")) cfg.dqs.num_fine = require_int(d["n_f"], "/dqs/n_f");
    if (d.contains("tau")) cfg.dqs.score_threshold = require_number(d["tau"], "/dqs/tau");
    if (d.contains("beta")) cfg.dqs.beta = require_number(d["beta"], "/dqs/beta");
  }
  if (j.contains("dga")) {
    const json& d = j["dga"];
    if (!d.is_object()) throw validation_error("/dga: expected object");
    if (d.contains("k")) cfg.shape.grid_side = require_int(d["k"], "/dga/k");
    if (d.contains("heads")) cfg.shape.heads = require_int(d["heads"], "/dga/heads");
  }
  if (j.contains("decoder")) {
    const json& d = j["decoder"];
    if (!d.is_object()) throw validation_error("/decoder: expected object");
    if (d.contains("layers")) cfg.shape.num_layers = require_int(d["layers"], "/decoder/layers");
    if (d.contains("ffn_hidden")) {
      cfg.shape.ffn_hidden = require_int(d["ffn_hidden"], "/decoder/ffn_hidden");
    }
  }
  if (j.contains("matching")) {
    const json& m = j["matching"];
    if (!m.is_object()) throw validation_error("/matching: expected object");
    if (m.contains("alpha")) cfg.match.alpha = require_number(m["alpha"], "/matching/alpha");
    if (m.contains("gamma")) cfg.match.gamma = require_number(m["gamma"], "/matching/gamma");
    if (m.contains("lambda_cls")) {
      cfg.match.lambda_cls = require_number(m["lambda_cls"], "/matching/lambda_cls");
    }
    if (m.contains("lambda_reg")) {
      cfg.match.lambda_reg = require_number(m["lambda_reg"], "/matching/lambda_reg");
    }
    if (m.contains("lambda_giou")) {
      cfg.match.lambda_giou = require_number(m["lambda_giou"], "/matching/lambda_giou");
    }
  }
  if (j.contains("extent")) {
    const json& e = j["extent"];
    if (!e.is_object()) throw validation_error("/extent: expected object");
    if (e.contains("x")) cfg.extent.x = require_number(e["x"], "/extent/x");
    if (e.contains("y")) cfg.extent.y = require_number(e["y"], "/extent/y");
    if (e.contains("z")) cfg.extent.z = require_number(e["z"], "/extent/z");
  }
  if (j.contains("params")) {
    const json& p = j["params"];
    if (!p.is_object()) throw validation_error("/params: expected object");
    const std::string mode = p.contains("mode") ? p["mode"].get<std::string>() : "seed";
    if (mode == "seed") {
      if (p.contains("seed")) {
        if (!p["seed"].is_number_integer() ||
            (p["seed"].is_number_integer() && !p["seed"].is_number_unsigned() &&
             p["seed"].get<long long>() < 0)) {
          throw validation_error("/params/seed: expected nonnegative integer");
        }
        cfg.param_seed = p["seed"].get<std::uint64_t>();
      }
    } else if (mode == "manifest") {
      if (!p.contains("path") || !p["path"].is_string()) {
        throw validation_error("/params/path: required string for manifest mode");
      }
      cfg.manifest_path = p["path"].get<std::string>();
    } else {
      throw validation_error("/params/mode: must be \"seed\" or \"manifest\"");
    }
  }
  if (j.contains("oracle_scores")) {
    if (!j["oracle_scores"].is_boolean()) {
      throw validation_error("/oracle_scores: expected boolean");
    }
    cfg.use_oracle_scores = j["oracle_scores"].get<bool>();
  }
  if (j.contains("save_attention")) {
    if (!j["save_attention"].is_boolean()) {
      throw validation_error("/save_attention: expected boolean");
    }
    cfg.save_attention = j["save_attention"].get<bool>();
  }
  if (j.contains("init_box")) {
    const json& b = j["init_box"];
    if (!b.is_array() || b.size() != 3) {
      throw validation_error("/init_box: expected [l, w, h]");
    }
    cfg.init_box_l = require_number(b[0], "/init_box/0");
    cfg.init_box_w = require_number(b[1], "/init_box/1");
    cfg.init_box_h = require_number(b[2], "/init_box/2");
  }

  try {
    cfg.validate();
  } catch (const validation_error& e) {
    throw validation_error(std::string("run config: ") + e.what());
  }
  return cfg;
}

RunConfig run_config_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error(tensor_io_code::open_failed, "cannot open run config " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw validation_error(std::string("run config: invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["map"] = {{"channels", cfg.shape.channels}};
  if (cfg.expect_height > 0) j["map"]["height"] = cfg.expect_height;
  if (cfg.expect_width > 0) j["map"]["width"] = cfg.expect_width;
  if (cfg.expect_cell_size > 0.0) j["map"]["cell_size"] = cfg.expect_cell_size;
  j["dqs"] = {{"r", cfg.dqs.foreground_ratio},
              {"n_f", cfg.dqs.num_fine},
              {"tau", cfg.dqs.score_threshold},
              {"beta", cfg.dqs.beta}};
  j["dga"] = {{"k", cfg.shape.grid_side}, {"heads", cfg.shape.heads}};
  j["decoder"] = {{"layers", cfg.shape.num_layers}, {"ffn_hidden", cfg.shape.ffn_width()}};
  j["matching"] = {{"alpha", cfg.match.alpha},
                   {"gamma", cfg.match.gamma},
                   {"lambda_cls", cfg.match.lambda_cls},
                   {"lambda_reg", cfg.match.lambda_reg},
                   {"lambda_giou", cfg.match.lambda_giou}};
  j["extent"] = {{"x", cfg.extent.x}, {"y", cfg.extent.y}, {"z", cfg.extent.z}};
  if (cfg.manifest_path.empty()) {
    j["params"] = {{"mode", "seed"}, {"seed", cfg.param_seed}};
  } else {
    j["params"] = {{"mode", "manifest"}, {"path", cfg.manifest_path}};
  }
  j["oracle_scores"] = cfg.use_oracle_scores;
  j["save_attention"] = cfg.save_attention;
  j["init_box"] = {cfg.init_box_l, cfg.init_box_w, cfg.init_box_h};
  return j;
}

namespace {

// Reference boxes for coarse queries: centered on the source cell, default
// size, zero heading.
void attach_initial_boxes(QuerySet& queries, const BevFeatureMap& map, const RunConfig& cfg) {
  queries.boxes.resize(queries.count);
  for (int i = 0; i < queries.count; ++i) {
    const long long flat = queries.flat_indices[i];
    const int row = static_cast<int>(flat / map.width);
    const int col = static_cast<int>(flat % map.width);
    const auto [px, py] =
        feature_to_world(map, {static_cast<double>(row), static_cast<double>(col)});
    queries.boxes[i] =
        Box3D::make(px, py, 0.0, cfg.init_box_l, cfg.init_box_w, cfg.init_box_h, 0.0);
  }
}

long long center_cell_flat(const BevFeatureMap& map, const Box3D& box) {
  const FeatureCoord rc = world_to_feature(map, box.x, box.y);
  const int row = std::clamp(static_cast<int>(std::llround(rc.row)), 0, map.height - 1);
  const int col = std::clamp(static_cast<int>(std::llround(rc.col)), 0, map.width - 1);
  return static_cast<long long>(map.flat_index(row, col));
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const Scene& scene,
                            const PipelineParams& params) {
  config.validate();
  scene.map.validate();
  if (scene.map.channels != config.shape.channels) {
    throw validation_error("run_pipeline: scene channels " +
                           std::to_string(scene.map.channels) + " != configured " +
                           std::to_string(config.shape.channels));
  }
  if (config.expect_height > 0 && scene.map.height != config.expect_height) {
    throw validation_error("run_pipeline: scene height differs from configured height");
  }
  if (config.expect_width > 0 && scene.map.width != config.expect_width) {
    throw validation_error("run_pipeline: scene width differs from configured width");
  }
  if (config.expect_cell_size > 0.0) {
    const double rel_x = std::abs(scene.map.cell_size_x - config.expect_cell_size) /
                         config.expect_cell_size;
    const double rel_y = std::abs(scene.map.cell_size_y - config.expect_cell_size) /
                         config.expect_cell_size;
    if (rel_x > 1e-9 || rel_y > 1e-9) {
      throw validation_error("run_pipeline: scene cell size differs from configured cell size");
    }
  }

  PipelineResult result;
  const auto t_total = Clock::now();

  // Foreground scores come from the raw map (or the scene oracle); position
  // embedding is added to the features every later stage consumes.
  auto t0 = Clock::now();
  std::vector<double> s_bev;
  if (config.use_oracle_scores) {
    if (scene.oracle_scores.size() != scene.map.cell_count()) {
      throw validation_error("run_pipeline: scene lacks oracle scores");
    }
    s_bev = scene.oracle_scores;
  } else {
    s_bev = mask_scores(scene.map, params.mask);
  }
  result.metrics.timings.scores_ms = ms_since(t0);

  const BevFeatureMap embedded = add_position_embedding(scene.map);

  t0 = Clock::now();
  QuerySet coarse = foreground_select(flatten_bev(embedded), s_bev, config.dqs.foreground_ratio);
  attach_initial_boxes(coarse, embedded, config);
  result.metrics.n_c = coarse.count;
  result.metrics.timings.foreground_ms = ms_since(t0);

  // One decoder layer enhances the coarse queries and emits S_c, S_l, B_c.
  t0 = Clock::now();
  LayerResult dqs_layer = layer_forward(coarse, embedded, params.dqs_layer, config.extent);
  result.dqs_proposals = std::move(dqs_layer.queries);
  result.metrics.timings.dqs_layer_ms = ms_since(t0);

  t0 = Clock::now();
  result.dqs_proposals.quality_scores.resize(result.dqs_proposals.count);
  for (int i = 0; i < result.dqs_proposals.count; ++i) {
    result.dqs_proposals.quality_scores[i] =
        quality_score(result.dqs_proposals.cls_scores[i], result.dqs_proposals.loc_scores[i],
                      config.dqs.beta, config.dqs.score_threshold);
  }
  QuerySet fine = quality_select(result.dqs_proposals, config.dqs.num_fine);
  fine.features = embed_quality_queries(fine.boxes, fine.fused_scores, config.extent,
                                        params.query_embed);
  result.metrics.n_f_effective = fine.count;
  result.metrics.timings.quality_ms = ms_since(t0);

  t0 = Clock::now();
  DecoderResult decoded = decoder_forward(fine, embedded, params.decoder_layers, config.extent,
                                          &result.decoder_traces);
  result.detections = std::move(decoded.final_queries);
  result.detections.fused_scores.resize(result.detections.count);
  for (int i = 0; i < result.detections.count; ++i) {
    result.detections.fused_scores[i] =
        quality_score(result.detections.cls_scores[i], result.detections.loc_scores[i],
                      config.dqs.beta, config.dqs.score_threshold);
  }
  result.metrics.timings.decoder_ms = ms_since(t0);

  // Quality-aware matching, both for the final detections and for the DQS
  // supervision targets.
  t0 = Clock::now();
  if (!scene.gt_boxes.empty()) {
    const auto final_cost =
        cost_matrix(result.detections, scene.gt_boxes, config.match, config.extent);
    result.assignment = hungarian_solve(final_cost, result.detections.count,
                                        static_cast<int>(scene.gt_boxes.size()));
    QuerySet& proposals = result.dqs_proposals;
    proposals.fused_scores = proposals.quality_scores;
    const auto dqs_cost = cost_matrix(proposals, scene.gt_boxes, config.match, config.extent);
    result.dqs_assignment =
        hungarian_solve(dqs_cost, proposals.count, static_cast<int>(scene.gt_boxes.size()));
  }
  result.losses =
      dqs_loss_values(result.dqs_proposals, scene.gt_boxes, result.dqs_assignment,
                      config.extent);
  result.metrics.timings.matching_ms = ms_since(t0);

  // Recall metrics.
  if (scene.gt_boxes.empty()) {
    result.metrics.dqs_recall = 1.0;
    result.metrics.fine_recall = 1.0;
  } else {
    std::unordered_set<long long> coarse_cells(coarse.flat_indices.begin(),
                                               coarse.flat_indices.end());
    int covered = 0;
    for (const Box3D& gt : scene.gt_boxes) {
      covered += coarse_cells.count(center_cell_flat(embedded, gt)) > 0;
    }
    result.metrics.dqs_recall = static_cast<double>(covered) / scene.gt_boxes.size();

    std::vector<char> hit(scene.gt_boxes.size(), 0);
    for (int i = 0; i < result.detections.count; ++i) {
      const Box3D& b = result.detections.boxes[i];
      std::size_t nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < scene.gt_boxes.size(); ++g) {
        const double dx = b.x - scene.gt_boxes[g].x;
        const double dy = b.y - scene.gt_boxes[g].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          nearest = g;
        }
      }
      hit[nearest] = 1;
    }
    int fine_covered = 0;
    for (char hv : hit) fine_covered += hv;
    result.metrics.fine_recall = static_cast<double>(fine_covered) / scene.gt_boxes.size();
    result.metrics.matched_cost_mean =
        result.assignment.pairs.empty()
            ? 0.0
            : result.assignment.total_cost / static_cast<double>(result.assignment.pairs.size());
  }
  result.metrics.timings.total_ms = ms_since(t_total);
  return result;
}

namespace {

json assignment_to_json(const Assignment& a) {
  json pairs = json::array();
  for (const auto& [q, g] : a.pairs) pairs.push_back({q, g});
  return {{"pairs", pairs}, {"total_cost", a.total_cost}};
}

}  // namespace

json report_to_json(const RunConfig& config, const Scene& scene, const PipelineResult& result,
                    const std::string& scene_dir) {
  json j;
  j["schema"] = "seed-head-report-v1";
  j["config"] = run_config_to_json(config);
  j["scene_dir"] = scene_dir;
  j["counts"] = {{"n_c", result.metrics.n_c},
                 {"n_f_effective", result.metrics.n_f_effective},
                 {"num_gt", scene.gt_boxes.size()}};
  json dets = json::array();
  for (int i = 0; i < result.detections.count; ++i) {
    const Box3D& b = result.detections.boxes[i];
    dets.push_back({{"box", {b.x, b.y, b.z, b.l, b.w, b.h, b.theta}},
                    {"cls_score", result.detections.cls_scores[i]},
                    {"loc_score", result.detections.loc_scores[i]},
                    {"fused_score", result.detections.fused_scores[i]}});
  }
  j["detections"] = std::move(dets);
  j["assignment"] = assignment_to_json(result.assignment);
  j["dqs"] = {{"assignment", assignment_to_json(result.dqs_assignment)},
              {"losses",
               {{"bce_cls", result.losses.bce_cls},
                {"loc_l1", result.losses.loc_l1},
                {"box_smooth_l1", result.losses.box_smooth_l1}}}};
  j["metrics"] = {{"dqs_recall", result.metrics.dqs_recall},
                  {"fine_recall", result.metrics.fine_recall},
                  {"matched_cost_mean", result.metrics.matched_cost_mean}};
  j["timings_ms"] = {{"scores", result.metrics.timings.scores_ms},
                     {"foreground", result.metrics.timings.foreground_ms},
                     {"dqs_layer", result.metrics.timings.dqs_layer_ms},
                     {"quality", result.metrics.timings.quality_ms},
                     {"decoder", result.metrics.timings.decoder_ms},
                     {"matching", result.metrics.timings.matching_ms},
                     {"total", result.metrics.timings.total_ms}};
  validate_report_json(j);
  return j;
}

void validate_report_json(const json& report) {
  auto need = [&](const char* key, const char* type) {
    if (!report.contains(key)) {
      throw validation_error(std::string("report: missing /") + key);
    }
    const json& v = report[key];
    const std::string t = type;
    const bool ok = (t == "object" && v.is_object()) || (t == "array" && v.is_array()) ||
                    (t == "string" && v.is_string());
    if (!ok) throw validation_error(std::string("report: /") + key + " must be " + type);
  };
  need("schema", "string");
  if (report["schema"].get<std::string>() != "seed-head-report-v1") {
    throw validation_error("report: /schema must be seed-head-report-v1");
  }
  need("config", "object");
  need("scene_dir", "string");
  need("counts", "object");
  need("detections", "array");
  need("assignment", "object");
  need("dqs", "object");
  need("metrics", "object");
  need("timings_ms", "object");
  for (const char* key : {"n_c", "n_f_effective", "num_gt"}) {
    if (!report["counts"].contains(key) || !report["counts"][key].is_number()) {
      throw validation_error(std::string("report: /counts/") + key + " must be a number");
    }
  }
  for (const char* key : {"dqs_recall", "fine_recall", "matched_cost_mean"}) {
    if (!report["metrics"].contains(key) || !report["metrics"][key].is_number()) {
      throw validation_error(std::string("report: /metrics/") + key + " must be a number");
    }
  }
  const json& metrics = report["metrics"];
  const double dqs_recall = metrics["dqs_recall"].get<double>();
  const double fine_recall = metrics["fine_recall"].get<double>();
  if (dqs_recall < 0.0 || dqs_recall > 1.0 || fine_recall < 0.0 || fine_recall > 1.0) {
    throw validation_error("report: recalls must lie in [0, 1]");
  }
  for (const auto& [key, value] : report["timings_ms"].items()) {
    if (!value.is_number() || value.get<double>() < 0.0) {
      throw validation_error("report: /timings_ms/" + key + " must be a nonnegative number");
    }
  }
  for (const json& det : report["detections"]) {
    if (!det.contains("box") || !det["box"].is_array() || det["box"].size() != 7) {
      throw validation_error("report: each detection needs a 7-number box");
    }
  }
  if (!report["assignment"].contains("pairs") || !report["assignment"]["pairs"].is_array()) {
    throw validation_error("report: /assignment/pairs must be an array");
  }
}

PipelineResult run_and_save(const RunConfig& config, const Scene& scene,
                            const std::string& scene_dir, const std::string& out_dir) {
  PipelineParams params = config.manifest_path.empty()
                              ? seeded_params(config.shape, config.param_seed)
                              : load_params(config.shape, config.manifest_path);
  PipelineResult result = run_pipeline(config, scene, params);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error(tensor_io_code::write_failed, "cannot create run dir " + out_dir);

  const json report = report_to_json(config, scene, result, scene_dir);
  std::ofstream os(out_dir + "/report.json", std::ios::trunc);
  if (!os) throw io_error(tensor_io_code::write_failed, "cannot write report.json");
  os << report.dump(2) << "\n";
  os.close();

  const int n = result.detections.count;
  std::vector<double> boxes(static_cast<std::size_t>(n) * 7);
  std::vector<double> scores(static_cast<std::size_t>(n) * 3);
  for (int i = 0; i < n; ++i) {
    const Box3D& b = result.detections.boxes[i];
    double* row = boxes.data() + static_cast<std::size_t>(i) * 7;
    row[0] = b.x; row[1] = b.y; row[2] = b.z;
    row[3] = b.l; row[4] = b.w; row[5] = b.h; row[6] = b.theta;
    scores[static_cast<std::size_t>(i) * 3 + 0] = result.detections.cls_scores[i];
    scores[static_cast<std::size_t>(i) * 3 + 1] = result.detections.loc_scores[i];
    scores[static_cast<std::size_t>(i) * 3 + 2] = result.detections.fused_scores[i];
  }
  write_tensor_f64(out_dir + "/final_boxes.bevt",
                   {static_cast<std::uint32_t>(n), 7}, boxes);
  write_tensor_f64(out_dir + "/final_scores.bevt",
                   {static_cast<std::uint32_t>(n), 3}, scores);

  if (config.save_attention) {
    for (std::size_t li = 0; li < result.decoder_traces.size(); ++li) {
      const DgaTrace& tr = result.decoder_traces[li];
      write_tensor_f64(out_dir + "/attn_positions_" + std::to_string(li) + ".bevt",
                       {static_cast<std::uint32_t>(tr.count),
                        static_cast<std::uint32_t>(tr.heads),
                        static_cast<std::uint32_t>(tr.grid_points), 2},
                       tr.positions);
      write_tensor_f64(out_dir + "/attn_weights_" + std::to_string(li) + ".bevt",
                       {static_cast<std::uint32_t>(tr.count),
                        static_cast<std::uint32_t>(tr.heads),
                        static_cast<std::uint32_t>(tr.grid_points)},
                       tr.weights);
    }
  }
  return result;
}

void dump_attention(const std::string& run_dir, int query_index, int layer_index,
                    const std::string& out_path) {
  std::ifstream is(run_dir + "/report.json");
  if (!is) throw io_error(tensor_io_code::open_failed, "cannot open report in " + run_dir);
  json report;
  try {
    is >> report;
  } catch (const json::exception& e) {
    throw validation_error(std::string("report.json: invalid JSON: ") + e.what());
  }
  validate_report_json(report);
  const std::string scene_dir = report["scene_dir"].get<std::string>();
  const Scene scene = load_scene(scene_dir);

  const std::string pos_path =
      run_dir + "/attn_positions_" + std::to_string(layer_index) + ".bevt";
  const std::string w_path = run_dir + "/attn_weights_" + std::to_string(layer_index) + ".bevt";
  if (layer_index < 0 || !std::filesystem::exists(pos_path)) {
    throw validation_error("dump_attention: layer index out of range");
  }
  auto [pdims, positions] = read_tensor_f64(pos_path);
  auto [wdims, weights] = read_tensor_f64(w_path);
  if (pdims.size() != 4 || wdims.size() != 3) {
    throw validation_error("dump_attention: unexpected attention tensor rank");
  }
  const int count = static_cast<int>(pdims[0]);
  const int heads = static_cast<int>(pdims[1]);
  const int grid_points = static_cast<int>(pdims[2]);
  if (query_index < 0 || query_index >= count) {
    throw validation_error("dump_attention: query index out of range");
  }

  const BevFeatureMap& map = scene.map;
  // Faint feature-magnitude canvas with weight splats on top.
  std::vector<double> base(map.cell_count(), 0.0);
  double base_max = 0.0;
  for (std::size_t cell = 0; cell < map.cell_count(); ++cell) {
    double acc = 0.0;
    for (int ch = 0; ch < map.channels; ++ch) {
      acc += std::abs(map.data[cell * map.channels + ch]);
    }
    base[cell] = acc / map.channels;
    base_max = std::max(base_max, base[cell]);
  }
  std::vector<double> splat(map.cell_count(), 0.0);
  double splat_max = 0.0;
  for (int m = 0; m < heads; ++m) {
    for (int jp = 0; jp < grid_points; ++jp) {
      const std::size_t idx =
          (static_cast<std::size_t>(query_index) * heads + m) * grid_points + jp;
      const double px = positions[idx * 2 + 0];
      const double py = positions[idx * 2 + 1];
      const FeatureCoord rc = world_to_feature(map, px, py);
      const int row = static_cast<int>(std::llround(rc.row));
      const int col = static_cast<int>(std::llround(rc.col));
      if (row < 0 || row >= map.height || col < 0 || col >= map.width) continue;
      splat[map.flat_index(row, col)] += weights[idx];
      splat_max = std::max(splat_max, splat[map.flat_index(row, col)]);
    }
  }

  PgmImage img;
  img.width = map.width;
  img.height = map.height;
  img.pixels.resize(map.cell_count());
  for (std::size_t cell = 0; cell < map.cell_count(); ++cell) {
    const double faint = base_max > 0.0 ? 60.0 * base[cell] / base_max : 0.0;
    const double bright = splat_max > 0.0 ? 195.0 * splat[cell] / splat_max : 0.0;
    img.pixels[cell] =
        static_cast<std::uint8_t>(std::min(255.0, std::floor(faint + bright)));
  }
  write_pgm(img, out_path);
}

}  // namespace seed
