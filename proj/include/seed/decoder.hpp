#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "seed/dga.hpp"
#include "seed/dqs.hpp"
#include "seed/nn.hpp"
#include "seed/queryset.hpp"

namespace seed {

// Multi-head scaled dot-product attention among the queries themselves. A
// sinusoidal encoding of each query's box center is added to Q and K inputs.
struct SelfAttentionParams {
  int heads = 4;
  Linear q_proj, k_proj, v_proj, out_proj;  // all C -> C

  static SelfAttentionParams seeded(int channels, int heads, std::uint64_t seed,
                                    const std::string& name);
  void validate(int channels) const;
};

// Per-layer prediction heads: classification and localization scores through
// sigmoid, and an 8-component residual box encoding
// (dx, dy, dz, dlog l, dlog w, dlog h, dsin, dcos).
struct PredictionHeads {
  Mlp2 cls_head;  // C -> hidden -> 1
  Mlp2 loc_head;  // C -> hidden -> 1
  Mlp2 box_head;  // C -> hidden -> 8

  static PredictionHeads seeded(int channels, std::uint64_t seed, const std::string& name);
  void validate(int channels) const;
};

// One decoder layer: self-attention, deformable grid attention, FFN, each with
// residual connection and post-normalization, followed by the heads.
struct DecoderLayerParams {
  SelfAttentionParams self_attn;
  DgaParams dga;
  Mlp2 ffn;  // C -> C_ff -> C
  LayerNorm norm_attn, norm_dga, norm_ffn;
  PredictionHeads heads;

  static DecoderLayerParams seeded(int channels, int grid_side, int attn_heads, int ffn_hidden,
                                   std::uint64_t seed, const std::string& name);
  void validate(int channels) const;
};

struct HeadOutputs {
  std::vector<double> cls_scores;              // N, in (0, 1)
  std::vector<double> loc_scores;              // N, in (0, 1)
  std::vector<std::array<double, 8>> box_deltas;  // N x 8 residual encodings
};

std::vector<double> self_attention(const std::vector<double>& features,
                                   const std::vector<Vec2>& centers, int channels,
                                   const SelfAttentionParams& params);

// Residual box refinement: centers move by delta * extent, sizes scale by
// exp(delta), heading follows atan2 of the updated (sin, cos) direction. A
// zero delta leaves the box bit-identical.
Box3D refine_box(const Box3D& box, const std::array<double, 8>& delta, const Extent& extent);

struct LayerResult {
  QuerySet queries;  // refined boxes, updated features, per-layer scores
  HeadOutputs heads;
};

LayerResult layer_forward(const QuerySet& queries, const BevFeatureMap& map,
                          const DecoderLayerParams& params, const Extent& extent,
                          DgaTrace* trace = nullptr);

struct DecoderResult {
  std::vector<HeadOutputs> per_layer;
  QuerySet final_queries;  // final boxes plus final-layer cls/loc scores
};

DecoderResult decoder_forward(const QuerySet& queries, const BevFeatureMap& map,
                              const std::vector<DecoderLayerParams>& layers,
                              const Extent& extent,
                              std::vector<DgaTrace>* traces = nullptr);

}  // namespace seed
