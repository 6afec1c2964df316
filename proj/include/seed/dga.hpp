#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seed/bev.hpp"
#include "seed/nn.hpp"
#include "seed/queryset.hpp"

namespace seed {

// Deformable grid attention over one BEV map: each query attends to the k x k
// grid points of its reference box, displaced by predicted per-head offsets,
// with per-head softmax weights and a value projection split into head slices.
struct DgaParams {
  int grid_side = 5;     // k; K = k * k grid points
  int heads = 4;         // M; channels divisible by M
  Linear offset_proj;    // C -> M*K*2, layout [head][grid][axis], axis 0 = x (meters)
  Linear weight_proj;    // C -> M*K, layout [head][grid]
  Linear value_proj;     // C -> C, split into M head slices of C/M
  Linear output_proj;    // C -> C

  int grid_points() const { return grid_side * grid_side; }
  static DgaParams seeded(int channels, int grid_side, int heads, std::uint64_t seed,
                          const std::string& name);
  void validate(int channels) const;
};

// M x K x 2 world-frame offsets (meters) for one query, flattened row-major.
std::vector<double> predict_offsets(std::span<const double> query, const DgaParams& params);

// M x K attention weights, each head a softmax over its K grid positions.
std::vector<double> predict_weights(std::span<const double> query, const DgaParams& params);

// Optional record of sampling geometry for visualization and gradient checks.
struct DgaTrace {
  int count = 0;
  int heads = 0;
  int grid_points = 0;
  std::vector<double> positions;  // count x M x K x 2 world (x, y)
  std::vector<double> weights;    // count x M x K
};

// N x C enhanced features; row i depends only on query i, its box, and the map.
std::vector<double> dga_forward(const QuerySet& queries, const BevFeatureMap& map,
                                const DgaParams& params, DgaTrace* trace = nullptr);

}  // namespace seed
