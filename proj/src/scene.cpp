#include "seed/scene.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "seed/error.hpp"
#include "seed/rng.hpp"
#include "seed/tensor_io.hpp"

namespace seed {

using nlohmann::json;

namespace {

void check_range(const double r[2], const char* name, bool allow_equal = false) {
  const bool ok = allow_equal ? r[0] <= r[1] : r[0] < r[1];
  if (!ok) throw validation_error(std::string("SceneSpec: degenerate range ") + name);
}

double blob_intensity(const std::vector<Box3D>& boxes, double px, double py, double sharpness) {
  double acc = 0.0;
  for (const Box3D& box : boxes) {
    const double dx = px - box.x;
    const double dy = py - box.y;
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    const double u = (c * dx + s * dy) / (0.5 * box.l);
    const double v = (-s * dx + c * dy) / (0.5 * box.w);
    acc += std::exp(-sharpness * (u * u + v * v));
  }
  return acc;
}

}  // namespace

void SceneSpec::validate() const {
  if (num_objects < 0) throw validation_error("SceneSpec: num_objects must be >= 0");
  if (map_height < 1 || map_width < 1 || map_channels < 1) {
    throw validation_error("SceneSpec: map dims must be >= 1");
  }
  check_range(extent_x, "extent_x");
  check_range(extent_y, "extent_y");
  check_range(extent_z, "extent_z");
  check_range(size_l, "size_l", true);
  check_range(size_w, "size_w", true);
  check_range(size_h, "size_h", true);
  check_range(heading, "heading", true);
  if (!(size_l[0] > 0.0 && size_w[0] > 0.0 && size_h[0] > 0.0)) {
    throw validation_error("SceneSpec: sizes must be positive");
  }
  if (!(blob_sharpness > 0.0)) throw validation_error("SceneSpec: blob_sharpness must be > 0");
}

Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  std::uint64_t stream = spec.seed;
  Xoshiro256 rng(splitmix64(stream));
  Scene scene;
  scene.map = BevFeatureMap::zeros(spec.map_height, spec.map_width, spec.map_channels);
  scene.map.cell_size_x = (spec.extent_x[1] - spec.extent_x[0]) / spec.map_width;
  scene.map.cell_size_y = (spec.extent_y[1] - spec.extent_y[0]) / spec.map_height;
  scene.map.origin_x = spec.extent_x[0] + 0.5 * scene.map.cell_size_x;
  scene.map.origin_y = spec.extent_y[0] + 0.5 * scene.map.cell_size_y;

  for (int obj = 0; obj < spec.num_objects; ++obj) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const Box3D cand = Box3D::make(
          rng.uniform(spec.extent_x[0], spec.extent_x[1]),
          rng.uniform(spec.extent_y[0], spec.extent_y[1]),
          rng.uniform(spec.extent_z[0], spec.extent_z[1]),
          rng.uniform(spec.size_l[0], spec.size_l[1]),
          rng.uniform(spec.size_w[0], spec.size_w[1]),
          rng.uniform(spec.size_h[0], spec.size_h[1]),
          rng.uniform(spec.heading[0], spec.heading[1]));
      bool separated = true;
      for (const Box3D& other : scene.gt_boxes) {
        if (bev_iou(cand, other) > 0.0) {
          separated = false;
          break;
        }
      }
      if (separated) {
        scene.gt_boxes.push_back(cand);
        placed = true;
      }
    }
    if (!placed) {
      throw validation_error("gen_scene: scene too crowded, rejection failed after 1e4 attempts");
    }
  }

  // Per-channel blob amplitudes, then per-cell intensity plus a noise floor.
  std::vector<double> amplitude(spec.map_channels);
  for (auto& a : amplitude) a = rng.uniform(0.5, 1.0);

  scene.oracle_scores.resize(scene.map.cell_count());
  const double noise_amp = 0.01;
  for (int r = 0; r < spec.map_height; ++r) {
    for (int c = 0; c < spec.map_width; ++c) {
      const auto [px, py] = feature_to_world(scene.map, {static_cast<double>(r),
                                                         static_cast<double>(c)});
      const double intensity =
          blob_intensity(scene.gt_boxes, px, py, spec.blob_sharpness);
      for (int ch = 0; ch < spec.map_channels; ++ch) {
        scene.map.at(r, c, ch) = amplitude[ch] * intensity + noise_amp * rng.uniform(-1.0, 1.0);
      }
      const double score = intensity + 0.5 * noise_amp * rng.uniform();
      scene.oracle_scores[scene.map.flat_index(r, c)] = std::min(1.0, score);
    }
  }
  return scene;
}

namespace {

json range_json(const double r[2]) { return json::array({r[0], r[1]}); }

void parse_range(const json& j, const std::string& pointer, double out[2]) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw validation_error(pointer + ": expected [lo, hi] number pair");
  }
  out[0] = j[0].get<double>();
  out[1] = j[1].get<double>();
}

}  // namespace

SceneSpec scene_spec_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error(tensor_io_code::open_failed, "cannot open scene spec " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw validation_error(std::string("scene spec: invalid JSON: ") + e.what());
  }
  SceneSpec spec;
  auto number = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw validation_error(std::string("/") + key + ": expected number");
    return j[key].get<double>();
  };
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() ||
        (!j["seed"].is_number_unsigned() && j["seed"].get<long long>() < 0)) {
      throw validation_error("/seed: expected nonnegative integer");
    }
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  spec.num_objects = static_cast<int>(number("num_objects", spec.num_objects));
  spec.map_height = static_cast<int>(number("map_height", spec.map_height));
  spec.map_width = static_cast<int>(number("map_width", spec.map_width));
  spec.map_channels = static_cast<int>(number("map_channels", spec.map_channels));
  spec.blob_sharpness = number("blob_sharpness", spec.blob_sharpness);
  if (j.contains("extent_x")) parse_range(j["extent_x"], "/extent_x", spec.extent_x);
  if (j.contains("extent_y")) parse_range(j["extent_y"], "/extent_y", spec.extent_y);
  if (j.contains("extent_z")) parse_range(j["extent_z"], "/extent_z", spec.extent_z);
  if (j.contains("size_l")) parse_range(j["size_l"], "/size_l", spec.size_l);
  if (j.contains("size_w")) parse_range(j["size_w"], "/size_w", spec.size_w);
  if (j.contains("size_h")) parse_range(j["size_h"], "/size_h", spec.size_h);
  if (j.contains("heading")) parse_range(j["heading"], "/heading", spec.heading);
  spec.validate();
  return spec;
}

void save_scene(const Scene& scene, const SceneSpec& spec, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error(tensor_io_code::write_failed, "cannot create scene dir " + dir);

  write_tensor_f64(dir + "/features.bevt",
                   {static_cast<std::uint32_t>(scene.map.height),
                    static_cast<std::uint32_t>(scene.map.width),
                    static_cast<std::uint32_t>(scene.map.channels)},
                   scene.map.data);
  write_tensor_f64(dir + "/oracle_scores.bevt",
                   {static_cast<std::uint32_t>(scene.map.height),
                    static_cast<std::uint32_t>(scene.map.width)},
                   scene.oracle_scores);

  json j;
  j["georeference"] = {{"cell_size_x", scene.map.cell_size_x},
                       {"cell_size_y", scene.map.cell_size_y},
                       {"origin_x", scene.map.origin_x},
                       {"origin_y", scene.map.origin_y}};
  j["gt_boxes"] = json::array();
  for (const Box3D& b : scene.gt_boxes) {
    j["gt_boxes"].push_back({b.x, b.y, b.z, b.l, b.w, b.h, b.theta});
  }
  j["spec"] = {{"seed", spec.seed},
               {"num_objects", spec.num_objects},
               {"map_height", spec.map_height},
               {"map_width", spec.map_width},
               {"map_channels", spec.map_channels},
               {"extent_x", range_json(spec.extent_x)},
               {"extent_y", range_json(spec.extent_y)},
               {"extent_z", range_json(spec.extent_z)},
               {"size_l", range_json(spec.size_l)},
               {"size_w", range_json(spec.size_w)},
               {"size_h", range_json(spec.size_h)},
               {"heading", range_json(spec.heading)},
               {"blob_sharpness", spec.blob_sharpness}};
  std::ofstream os(dir + "/scene.json", std::ios::trunc);
  if (!os) throw io_error(tensor_io_code::write_failed, "cannot write scene.json in " + dir);
  os << j.dump(2) << "\n";
}

Scene load_scene(const std::string& dir) {
  Scene scene;
  auto [fdims, fdata] = read_tensor_f64(dir + "/features.bevt");
  if (fdims.size() != 3) {
    throw validation_error("load_scene: features.bevt must be rank 3 (H, W, C)");
  }
  scene.map.height = static_cast<int>(fdims[0]);
  scene.map.width = static_cast<int>(fdims[1]);
  scene.map.channels = static_cast<int>(fdims[2]);
  scene.map.data = std::move(fdata);

  auto [sdims, sdata] = read_tensor_f64(dir + "/oracle_scores.bevt");
  if (sdims.size() != 2 || sdims[0] != fdims[0] || sdims[1] != fdims[1]) {
    throw validation_error("load_scene: oracle_scores.bevt must be H x W");
  }
  scene.oracle_scores = std::move(sdata);

  std::ifstream is(dir + "/scene.json");
  if (!is) throw io_error(tensor_io_code::open_failed, "cannot open scene.json in " + dir);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw validation_error(std::string("scene.json: invalid JSON: ") + e.what());
  }
  const json& geo = j.at("georeference");
  scene.map.cell_size_x = geo.at("cell_size_x").get<double>();
  scene.map.cell_size_y = geo.at("cell_size_y").get<double>();
  scene.map.origin_x = geo.at("origin_x").get<double>();
  scene.map.origin_y = geo.at("origin_y").get<double>();
  scene.map.validate();
  for (const auto& row : j.at("gt_boxes")) {
    if (!row.is_array() || row.size() != 7) {
      throw validation_error("scene.json: gt box must have 7 numbers");
    }
    scene.gt_boxes.push_back(Box3D::make(row[0], row[1], row[2], row[3], row[4], row[5],
                                         row[6]));
  }
  return scene;
}

}  // namespace seed
