#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seed/bev.hpp"
#include "seed/boxgeom.hpp"

namespace seed {

// Synthetic scene recipe: well-separated boxes with oriented Gaussian feature
// blobs on the BEV grid, fully reproducible from the seed.
struct SceneSpec {
  std::uint64_t seed = 0;
  int num_objects = 5;
  int map_height = 64;
  int map_width = 64;
  int map_channels = 32;
  double extent_x[2] = {-32.0, 32.0};  // world x range (meters)
  double extent_y[2] = {-32.0, 32.0};
  double extent_z[2] = {-2.0, 6.0};
  double size_l[2] = {2.0, 5.0};
  double size_w[2] = {1.5, 3.0};
  double size_h[2] = {1.2, 2.5};
  double heading[2] = {-3.14159265358979323846, 3.14159265358979323846};
  double blob_sharpness = 4.0;

  void validate() const;
};

struct Scene {
  std::vector<Box3D> gt_boxes;
  BevFeatureMap map;
  std::vector<double> oracle_scores;  // per-cell S_bev in [0, 1], row-major
};

// Boxes rejected until pairwise BEV IoU is zero; per-channel blob amplitudes
// and a low-amplitude noise floor come from the same seeded stream. Throws
// validation_error after 1e4 rejected draws for one object.
Scene gen_scene(const SceneSpec& spec);

SceneSpec scene_spec_from_json_file(const std::string& path);

// Directory layout: features.bevt (H x W x C), oracle_scores.bevt (H x W),
// scene.json (georeference, ground-truth boxes, spec echo).
void save_scene(const Scene& scene, const SceneSpec& spec, const std::string& dir);
Scene load_scene(const std::string& dir);

}  // namespace seed
