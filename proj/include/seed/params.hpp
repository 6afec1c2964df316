#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seed/decoder.hpp"
#include "seed/dqs.hpp"

namespace seed {

// Shape knobs for one full head: everything needed to size the parameters.
struct ModelShape {
  int channels = 32;
  int grid_side = 5;      // DGA k
  int heads = 4;          // attention heads (self-attention and DGA)
  int num_layers = 6;     // decoder depth
  int ffn_hidden = 0;     // 0 means 4 * channels
  int mask_hidden = 0;    // 0 means channels
  int embed_hidden = 0;   // 0 means channels

  int ffn_width() const { return ffn_hidden > 0 ? ffn_hidden : 4 * channels; }
  int mask_width() const { return mask_hidden > 0 ? mask_hidden : channels; }
  int embed_width() const { return embed_hidden > 0 ? embed_hidden : channels; }
  void validate() const;
};

// All learnable tensors of the head: the mask predictor, the decoder layer
// used inside dual query selection, the quality-query embedding MLP, and the
// main decoder stack.
struct PipelineParams {
  MaskPredictorParams mask;
  DecoderLayerParams dqs_layer;
  Mlp2 query_embed;  // 9 -> hidden -> C
  std::vector<DecoderLayerParams> decoder_layers;
};

// Deterministic initialization: every tensor comes from the xoshiro256**
// stream keyed by (seed, tensor name), uniform in [-1/sqrt(fan_in),
// 1/sqrt(fan_in)].
PipelineParams seeded_params(const ModelShape& shape, std::uint64_t seed);

// Named-tensor persistence: BEVT1 files plus a JSON manifest mapping names to
// files and shapes.
void save_params(const PipelineParams& params, const ModelShape& shape,
                 const std::string& dir);
PipelineParams load_params(const ModelShape& shape, const std::string& manifest_path);

}  // namespace seed
