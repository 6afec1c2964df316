#include "seed/decoder.hpp"

#include <cmath>

#include "seed/error.hpp"
#include "seed/threading.hpp"

namespace seed {

SelfAttentionParams SelfAttentionParams::seeded(int channels, int heads, std::uint64_t seed,
                                                const std::string& name) {
  SelfAttentionParams p;
  p.heads = heads;
  p.q_proj = Linear::seeded(channels, channels, seed, name + ".q");
  p.k_proj = Linear::seeded(channels, channels, seed, name + ".k");
  p.v_proj = Linear::seeded(channels, channels, seed, name + ".v");
  p.out_proj = Linear::seeded(channels, channels, seed, name + ".out");
  return p;
}

void SelfAttentionParams::validate(int channels) const {
  if (heads < 1 || channels % heads != 0) {
    throw validation_error("SelfAttentionParams: channels must divide evenly into heads");
  }
  for (const Linear* l : {&q_proj, &k_proj, &v_proj, &out_proj}) {
    l->validate();
    if (l->in != channels || l->out != channels) {
      throw validation_error("SelfAttentionParams: projections must be C -> C");
    }
  }
}

PredictionHeads PredictionHeads::seeded(int channels, std::uint64_t seed,
                                        const std::string& name) {
  PredictionHeads h;
  h.cls_head = Mlp2::seeded(channels, channels, 1, seed, name + ".cls");
  h.loc_head = Mlp2::seeded(channels, channels, 1, seed, name + ".loc");
  h.box_head = Mlp2::seeded(channels, channels, 8, seed, name + ".box");
  return h;
}

void PredictionHeads::validate(int channels) const {
  cls_head.validate();
  loc_head.validate();
  box_head.validate();
  if (cls_head.l1.in != channels || cls_head.l2.out != 1 || loc_head.l1.in != channels ||
      loc_head.l2.out != 1 || box_head.l1.in != channels || box_head.l2.out != 8) {
    throw validation_error("PredictionHeads: head shapes inconsistent with C");
  }
}

DecoderLayerParams DecoderLayerParams::seeded(int channels, int grid_side, int attn_heads,
                                              int ffn_hidden, std::uint64_t seed,
                                              const std::string& name) {
  DecoderLayerParams p;
  p.self_attn = SelfAttentionParams::seeded(channels, attn_heads, seed, name + ".sa");
  p.dga = DgaParams::seeded(channels, grid_side, attn_heads, seed, name + ".dga");
  p.ffn = Mlp2::seeded(channels, ffn_hidden, channels, seed, name + ".ffn");
  p.norm_attn = LayerNorm::seeded(channels, seed, name + ".norm_attn");
  p.norm_dga = LayerNorm::seeded(channels, seed, name + ".norm_dga");
  p.norm_ffn = LayerNorm::seeded(channels, seed, name + ".norm_ffn");
  p.heads = PredictionHeads::seeded(channels, seed, name + ".heads");
  return p;
}

void DecoderLayerParams::validate(int channels) const {
  self_attn.validate(channels);
  dga.validate(channels);
  ffn.validate();
  if (ffn.l1.in != channels || ffn.l2.out != channels) {
    throw validation_error("DecoderLayerParams: FFN must map C -> C");
  }
  if (norm_attn.dim != channels || norm_dga.dim != channels || norm_ffn.dim != channels) {
    throw validation_error("DecoderLayerParams: layer-norm widths inconsistent with C");
  }
  heads.validate(channels);
}

std::vector<double> self_attention(const std::vector<double>& features,
                                   const std::vector<Vec2>& centers, int channels,
                                   const SelfAttentionParams& params) {
  params.validate(channels);
  if (features.empty() || features.size() % channels != 0) {
    throw validation_error("self_attention: empty or misshaped feature matrix");
  }
  const int n = static_cast<int>(features.size()) / channels;
  if (centers.size() != static_cast<std::size_t>(n)) {
    throw validation_error("self_attention: centers length mismatch");
  }
  const int heads = params.heads;
  const int d = channels / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  // Position-augmented inputs for Q/K; values read the raw features.
  std::vector<double> q(features.size()), k(features.size()), v(features.size());
  std::vector<double> pe(channels), augmented(channels);
  for (int i = 0; i < n; ++i) {
    sincos_encode_2d(centers[i].x, centers[i].y, channels, pe);
    const double* row = features.data() + static_cast<std::size_t>(i) * channels;
    for (int ch = 0; ch < channels; ++ch) augmented[ch] = row[ch] + pe[ch];
    params.q_proj.apply(augmented, std::span<double>(q.data() + static_cast<std::size_t>(i) * channels, channels));
    params.k_proj.apply(augmented, std::span<double>(k.data() + static_cast<std::size_t>(i) * channels, channels));
    params.v_proj.apply(std::span<const double>(row, channels),
                        std::span<double>(v.data() + static_cast<std::size_t>(i) * channels, channels));
  }

  std::vector<double> out(features.size());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<double> logits(n), probs(n), concat(channels);
    for (int m = 0; m < heads; ++m) {
      const double* qi = q.data() + i * channels + static_cast<std::size_t>(m) * d;
      for (int j = 0; j < n; ++j) {
        const double* kj = k.data() + static_cast<std::size_t>(j) * channels +
                           static_cast<std::size_t>(m) * d;
        double acc = 0.0;
        for (int t = 0; t < d; ++t) acc += qi[t] * kj[t];
        logits[j] = acc * scale;
      }
      softmax(logits, probs);
      double* slot = concat.data() + static_cast<std::size_t>(m) * d;
      for (int t = 0; t < d; ++t) slot[t] = 0.0;
      for (int j = 0; j < n; ++j) {
        const double* vj = v.data() + static_cast<std::size_t>(j) * channels +
                           static_cast<std::size_t>(m) * d;
        for (int t = 0; t < d; ++t) slot[t] += probs[j] * vj[t];
      }
    }
    params.out_proj.apply(concat, std::span<double>(out.data() + i * channels, channels));
  });
  return out;
}

Box3D refine_box(const Box3D& box, const std::array<double, 8>& delta, const Extent& extent) {
  Box3D r = box;
  r.x = box.x + delta[0] * extent.x;
  r.y = box.y + delta[1] * extent.y;
  r.z = box.z + delta[2] * extent.z;
  r.l = box.l * std::exp(delta[3]);
  r.w = box.w * std::exp(delta[4]);
  r.h = box.h * std::exp(delta[5]);
  if (delta[6] != 0.0 || delta[7] != 0.0) {
    // atan2 of the residual-updated direction; the zero-delta case keeps the
    // stored heading bit-identical.
    r.theta = canonical_angle(
        std::atan2(std::sin(box.theta) + delta[6], std::cos(box.theta) + delta[7]));
  }
  return r;
}

LayerResult layer_forward(const QuerySet& queries, const BevFeatureMap& map,
                          const DecoderLayerParams& params, const Extent& extent,
                          DgaTrace* trace) {
  queries.validate();
  params.validate(queries.channels);
  extent.validate();
  if (!queries.has_boxes()) {
    throw validation_error("layer_forward: queries must carry reference boxes");
  }
  if (queries.count == 0) throw validation_error("layer_forward: empty query set");

  const int n = queries.count;
  const int c = queries.channels;

  std::vector<Vec2> centers(n);
  for (int i = 0; i < n; ++i) centers[i] = {queries.boxes[i].x, queries.boxes[i].y};

  // Self-attention sublayer.
  std::vector<double> x = queries.features;
  {
    const std::vector<double> sa = self_attention(x, centers, c, params.self_attn);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += sa[i];
    for (int i = 0; i < n; ++i) {
      params.norm_attn.apply_inplace(std::span<double>(x.data() + static_cast<std::size_t>(i) * c, c));
    }
  }

  // Deformable grid attention sublayer against the reference boxes.
  QuerySet mid = queries;
  mid.features = x;
  {
    const std::vector<double> dg = dga_forward(mid, map, params.dga, trace);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dg[i];
    for (int i = 0; i < n; ++i) {
      params.norm_dga.apply_inplace(std::span<double>(x.data() + static_cast<std::size_t>(i) * c, c));
    }
  }

  // FFN sublayer.
  {
    std::vector<double> ff(c);
    for (int i = 0; i < n; ++i) {
      auto row = std::span<double>(x.data() + static_cast<std::size_t>(i) * c, c);
      params.ffn.apply(row, ff);
      for (int ch = 0; ch < c; ++ch) row[ch] += ff[ch];
      params.norm_ffn.apply_inplace(row);
    }
  }

  LayerResult result;
  result.heads.cls_scores.resize(n);
  result.heads.loc_scores.resize(n);
  result.heads.box_deltas.resize(n);

  result.queries = queries;
  result.queries.features = x;
  double scalar[1];
  for (int i = 0; i < n; ++i) {
    const auto row = std::span<const double>(x.data() + static_cast<std::size_t>(i) * c, c);
    params.heads.cls_head.apply(row, std::span<double>(scalar, 1));
    result.heads.cls_scores[i] = sigmoid(scalar[0]);
    params.heads.loc_head.apply(row, std::span<double>(scalar, 1));
    result.heads.loc_scores[i] = sigmoid(scalar[0]);
    params.heads.box_head.apply(row, result.heads.box_deltas[i]);
    result.queries.boxes[i] = refine_box(queries.boxes[i], result.heads.box_deltas[i], extent);
  }
  result.queries.cls_scores = result.heads.cls_scores;
  result.queries.loc_scores = result.heads.loc_scores;
  return result;
}

DecoderResult decoder_forward(const QuerySet& queries, const BevFeatureMap& map,
                              const std::vector<DecoderLayerParams>& layers,
                              const Extent& extent, std::vector<DgaTrace>* traces) {
  if (layers.empty()) throw validation_error("decoder_forward: needs at least one layer");
  DecoderResult result;
  result.per_layer.reserve(layers.size());
  if (traces) traces->resize(layers.size());

  QuerySet current = queries;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    LayerResult lr = layer_forward(current, map, layers[li], extent,
                                   traces ? &(*traces)[li] : nullptr);
    result.per_layer.push_back(std::move(lr.heads));
    current = std::move(lr.queries);
  }
  result.final_queries = std::move(current);
  return result;
}

}  // namespace seed
