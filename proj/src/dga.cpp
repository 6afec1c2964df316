#include "seed/dga.hpp"

#include <cmath>

#include "seed/boxgeom.hpp"
#include "seed/error.hpp"
#include "seed/threading.hpp"

namespace seed {

DgaParams DgaParams::seeded(int channels, int grid_side, int heads, std::uint64_t seed,
                            const std::string& name) {
  DgaParams p;
  p.grid_side = grid_side;
  p.heads = heads;
  const int K = p.grid_points();
  p.offset_proj = Linear::seeded(channels, heads * K * 2, seed, name + ".offset");
  p.weight_proj = Linear::seeded(channels, heads * K, seed, name + ".weight");
  p.value_proj = Linear::seeded(channels, channels, seed, name + ".value");
  p.output_proj = Linear::seeded(channels, channels, seed, name + ".output");
  return p;
}

void DgaParams::validate(int channels) const {
  if (grid_side < 1) throw validation_error("DgaParams: grid side must be >= 1");
  if (heads < 1 || channels % heads != 0) {
    throw validation_error("DgaParams: channels must divide evenly into heads");
  }
  const int K = grid_points();
  offset_proj.validate();
  weight_proj.validate();
  value_proj.validate();
  output_proj.validate();
  if (offset_proj.in != channels || offset_proj.out != heads * K * 2 ||
      weight_proj.in != channels || weight_proj.out != heads * K ||
      value_proj.in != channels || value_proj.out != channels ||
      output_proj.in != channels || output_proj.out != channels) {
    throw validation_error("DgaParams: projection shapes inconsistent with C/M/K");
  }
}

std::vector<double> predict_offsets(std::span<const double> query, const DgaParams& params) {
  if (query.size() != static_cast<std::size_t>(params.offset_proj.in)) {
    throw validation_error("predict_offsets: query width mismatch");
  }
  return params.offset_proj.apply(query);
}

std::vector<double> predict_weights(std::span<const double> query, const DgaParams& params) {
  if (query.size() != static_cast<std::size_t>(params.weight_proj.in)) {
    throw validation_error("predict_weights: query width mismatch");
  }
  std::vector<double> logits = params.weight_proj.apply(query);
  const int K = params.grid_points();
  std::vector<double> weights(logits.size());
  for (int m = 0; m < params.heads; ++m) {
    softmax(std::span<const double>(logits.data() + static_cast<std::size_t>(m) * K, K),
            std::span<double>(weights.data() + static_cast<std::size_t>(m) * K, K));
  }
  return weights;
}

std::vector<double> dga_forward(const QuerySet& queries, const BevFeatureMap& map,
                                const DgaParams& params, DgaTrace* trace) {
  queries.validate();
  map.validate();
  params.validate(queries.channels);
  if (!queries.has_boxes()) {
    throw validation_error("dga_forward: queries must carry reference boxes");
  }

  const int n = queries.count;
  const int c = queries.channels;
  const int heads = params.heads;
  const int K = params.grid_points();
  const int slice = c / heads;

  std::vector<double> out(static_cast<std::size_t>(n) * c);
  if (trace) {
    trace->count = n;
    trace->heads = heads;
    trace->grid_points = K;
    trace->positions.assign(static_cast<std::size_t>(n) * heads * K * 2, 0.0);
    trace->weights.assign(static_cast<std::size_t>(n) * heads * K, 0.0);
  }

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t qi) {
    const auto query = queries.row(static_cast<int>(qi));
    const std::vector<Vec2> grid = grid_reference_points(queries.boxes[qi], params.grid_side);
    const std::vector<double> offsets = predict_offsets(query, params);
    const std::vector<double> weights = predict_weights(query, params);

    std::vector<double> sampled(c);
    std::vector<double> mixed(c, 0.0);  // concatenated head outputs
    for (int m = 0; m < heads; ++m) {
      double* head_out = mixed.data() + static_cast<std::size_t>(m) * slice;
      for (int j = 0; j < K; ++j) {
        const std::size_t oid = (static_cast<std::size_t>(m) * K + j) * 2;
        const double px = grid[j].x + offsets[oid + 0];
        const double py = grid[j].y + offsets[oid + 1];
        bilinear_sample_into(map, world_to_feature(map, px, py), sampled);
        const double a = weights[static_cast<std::size_t>(m) * K + j];
        // Head slice of the value projection: rows [m*slice, (m+1)*slice).
        for (int t = 0; t < slice; ++t) {
          const int row = m * slice + t;
          const double* wrow = params.value_proj.weight.data() +
                               static_cast<std::size_t>(row) * c;
          double acc = params.value_proj.bias[row];
          for (int ch = 0; ch < c; ++ch) acc += wrow[ch] * sampled[ch];
          head_out[t] += a * acc;
        }
        if (trace) {
          const std::size_t base = ((qi * heads + m) * K + j);
          trace->positions[base * 2 + 0] = px;
          trace->positions[base * 2 + 1] = py;
          trace->weights[base] = a;
        }
      }
    }
    params.output_proj.apply(mixed, std::span<double>(out.data() + qi * c, c));
  });
  return out;
}

}  // namespace seed
