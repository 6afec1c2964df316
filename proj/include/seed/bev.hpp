#pragma once

#include <span>
#include <vector>

namespace seed {

// Continuous (row, col) coordinate on a feature grid. (0, 0) is the center of
// cell (row 0, col 0); out-of-bounds values are legal inputs to the sampler.
struct FeatureCoord {
  double row = 0.0;
  double col = 0.0;
};

// Dense H x W x C feature grid with world-frame georeferencing.
// data is row-major: data[(r * width + c) * channels + ch].
struct BevFeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  double cell_size_x = 1.0;  // meters per column step
  double cell_size_y = 1.0;  // meters per row step
  double origin_x = 0.0;     // world x of the center of cell (0, 0)
  double origin_y = 0.0;     // world y of the center of cell (0, 0)
  std::vector<double> data;

  static BevFeatureMap zeros(int h, int w, int c);

  // Throws validation_error when shape/sizes are inconsistent.
  void validate() const;

  std::size_t cell_count() const { return static_cast<std::size_t>(height) * width; }
  std::size_t flat_index(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  double& at(int row, int col, int ch) {
    return data[flat_index(row, col) * channels + ch];
  }
  double at(int row, int col, int ch) const {
    return data[flat_index(row, col) * channels + ch];
  }
  std::span<const double> cell(int row, int col) const {
    return {data.data() + flat_index(row, col) * channels, static_cast<std::size_t>(channels)};
  }
};

// Affine georeference. world_to_feature is the exact inverse of
// feature_to_world; no clamping on either side.
FeatureCoord world_to_feature(const BevFeatureMap& map, double x, double y);
// Returns world (x, y) of a continuous (row, col).
std::pair<double, double> feature_to_world(const BevFeatureMap& map, const FeatureCoord& rc);

// Bilinear interpolation over the four surrounding cell centers. Cells outside
// [0, H-1] x [0, W-1] contribute zero. Throws validation_error on non-finite rc.
std::vector<double> bilinear_sample(const BevFeatureMap& map, const FeatureCoord& rc);
void bilinear_sample_into(const BevFeatureMap& map, const FeatureCoord& rc,
                          std::span<double> out);

// C x 2 derivative of the sampled feature w.r.t. (row, col), row-major
// [ch][axis] with axis 0 = row, axis 1 = col. On an integer row/col line the
// derivative is one-sided (into the cell of floor(rc)) and on_lattice is set.
struct SampleJacobian {
  std::vector<double> d;  // channels x 2
  bool on_lattice = false;

  double at(int ch, int axis) const { return d[static_cast<std::size_t>(ch) * 2 + axis]; }
};
SampleJacobian bilinear_sample_jacobian(const BevFeatureMap& map, const FeatureCoord& rc);

// Fixed 2D sinusoidal embedding: the first c/2 channels encode the column
// index, the last c/2 the row index, alternating sin/cos over geometrically
// spaced frequencies with base 10000. Requires even c >= 4. The returned map
// carries unit cell size and zero origin.
BevFeatureMap position_embedding(int h, int w, int c);

// Sinusoidal encoding of a continuous 2D position into c channels (same layout
// as position_embedding: x in the first half, y in the second).
void sincos_encode_2d(double x, double y, int c, std::span<double> out);

// map + position_embedding(h, w, c), elementwise.
BevFeatureMap add_position_embedding(const BevFeatureMap& map);

}  // namespace seed
