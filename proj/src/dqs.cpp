#include "seed/dqs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seed/error.hpp"

namespace seed {

QuerySet QuerySet::empty(int channels) {
  QuerySet qs;
  qs.channels = channels;
  return qs;
}

void QuerySet::validate() const {
  if (count < 0 || channels < 1) throw validation_error("QuerySet: bad count/channels");
  const auto n = static_cast<std::size_t>(count);
  if (features.size() != n * channels) throw validation_error("QuerySet: features length");
  if (flat_indices.size() != n) throw validation_error("QuerySet: flat_indices length");
  auto check_scores = [&](const std::vector<double>& s, const char* name) {
    if (s.empty()) return;
    if (s.size() != n) throw validation_error(std::string("QuerySet: ") + name + " length");
    for (double v : s) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw validation_error(std::string("QuerySet: ") + name + " outside [0, 1]");
      }
    }
  };
  if (!boxes.empty() && boxes.size() != n) throw validation_error("QuerySet: boxes length");
  check_scores(cls_scores, "cls_scores");
  check_scores(loc_scores, "loc_scores");
  check_scores(quality_scores, "quality_scores");
  check_scores(fused_scores, "fused_scores");
}

void MaskPredictorParams::validate(int channels) const {
  mlp.validate();
  if (mlp.l1.in != channels || mlp.l2.out != 1) {
    throw validation_error("MaskPredictorParams: shape mismatch with feature channels");
  }
}

void DqsConfig::validate() const {
  if (!(foreground_ratio > 0.0 && foreground_ratio <= 1.0)) {
    throw validation_error("DqsConfig: foreground_ratio must be in (0, 1]");
  }
  if (num_fine < 1) throw validation_error("DqsConfig: num_fine must be >= 1");
  if (!(score_threshold >= 0.0 && score_threshold < 1.0)) {
    throw validation_error("DqsConfig: score_threshold must be in [0, 1)");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw validation_error("DqsConfig: beta must be in (0, 1)");
}

void Extent::validate() const {
  if (!(x > 0.0 && y > 0.0 && z > 0.0)) {
    throw validation_error("Extent: ranges must be positive");
  }
}

std::vector<double> mask_scores(const BevFeatureMap& map, const MaskPredictorParams& params) {
  map.validate();
  params.validate(map.channels);
  std::vector<double> scores(map.cell_count());
  double out[1];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    params.mlp.apply(
        std::span<const double>(map.data.data() + i * map.channels, map.channels),
        std::span<double>(out, 1));
    scores[i] = sigmoid(out[0]);
  }
  return scores;
}

QuerySet flatten_bev(const BevFeatureMap& map) {
  map.validate();
  QuerySet qs;
  qs.count = static_cast<int>(map.cell_count());
  qs.channels = map.channels;
  qs.features = map.data;
  qs.flat_indices.resize(qs.count);
  std::iota(qs.flat_indices.begin(), qs.flat_indices.end(), 0LL);
  return qs;
}

namespace {

// Indices of the top n scores, ordered by (score desc, index asc).
std::vector<int> top_indices(const std::vector<double>& scores, int n) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(std::min<std::size_t>(n, order.size()));
  return order;
}

QuerySet gather(const QuerySet& src, const std::vector<int>& idx) {
  QuerySet out;
  out.count = static_cast<int>(idx.size());
  out.channels = src.channels;
  out.features.resize(static_cast<std::size_t>(out.count) * out.channels);
  out.flat_indices.resize(out.count);
  for (int i = 0; i < out.count; ++i) {
    const auto row = src.row(idx[i]);
    std::copy(row.begin(), row.end(), out.row(i).begin());
    out.flat_indices[i] = src.flat_indices[idx[i]];
  }
  auto gather_vec = [&](const std::vector<double>& v, std::vector<double>& dst) {
    if (v.empty()) return;
    dst.resize(out.count);
    for (int i = 0; i < out.count; ++i) dst[i] = v[idx[i]];
  };
  if (!src.boxes.empty()) {
    out.boxes.resize(out.count);
    for (int i = 0; i < out.count; ++i) out.boxes[i] = src.boxes[idx[i]];
  }
  gather_vec(src.cls_scores, out.cls_scores);
  gather_vec(src.loc_scores, out.loc_scores);
  gather_vec(src.quality_scores, out.quality_scores);
  gather_vec(src.fused_scores, out.fused_scores);
  return out;
}

}  // namespace

QuerySet foreground_select(const QuerySet& flattened, const std::vector<double>& s_bev,
                           double foreground_ratio) {
  flattened.validate();
  if (flattened.count == 0) throw validation_error("foreground_select: empty input");
  if (s_bev.size() != static_cast<std::size_t>(flattened.count)) {
    throw validation_error("foreground_select: score length != cell count");
  }
  if (!(foreground_ratio > 0.0 && foreground_ratio <= 1.0)) {
    throw validation_error("foreground_select: ratio must be in (0, 1]");
  }
  const int n_c = std::max(
      1, static_cast<int>(std::floor(static_cast<double>(flattened.count) * foreground_ratio)));
  // Rank cells by flat index so ties resolve identically under any input order.
  std::vector<int> by_flat(flattened.count);
  std::iota(by_flat.begin(), by_flat.end(), 0);
  std::stable_sort(by_flat.begin(), by_flat.end(), [&](int a, int b) {
    return flattened.flat_indices[a] < flattened.flat_indices[b];
  });
  std::vector<double> ordered_scores(flattened.count);
  for (int i = 0; i < flattened.count; ++i) ordered_scores[i] = s_bev[by_flat[i]];
  std::vector<int> top = top_indices(ordered_scores, n_c);
  std::vector<int> selected(top.size());
  for (std::size_t i = 0; i < top.size(); ++i) selected[i] = by_flat[top[i]];

  QuerySet out = gather(flattened, selected);
  out.cls_scores.resize(out.count);
  for (int i = 0; i < out.count; ++i) out.cls_scores[i] = s_bev[selected[i]];
  return out;
}

double quality_score(double s_c, double s_l, double beta, double tau) {
  if (s_c > tau) return std::pow(s_c, 1.0 - beta) * std::pow(s_l, beta);
  return s_c;
}

QuerySet quality_select(const QuerySet& candidates, int num_fine) {
  candidates.validate();
  if (!candidates.has_boxes() || candidates.quality_scores.empty()) {
    throw validation_error("quality_select: candidates need boxes and quality scores");
  }
  if (num_fine < 1) throw validation_error("quality_select: num_fine must be >= 1");
  std::vector<int> idx = top_indices(candidates.quality_scores, num_fine);
  QuerySet out = gather(candidates, idx);
  out.fused_scores.resize(out.count);
  for (int i = 0; i < out.count; ++i) out.fused_scores[i] = candidates.quality_scores[idx[i]];
  return out;
}

std::array<double, 8> encode_box(const Box3D& box, const Extent& extent) {
  return {box.x / extent.x, box.y / extent.y, box.z / extent.z,
          box.l / extent.x, box.w / extent.y, box.h / extent.z,
          std::sin(box.theta), std::cos(box.theta)};
}

std::vector<double> embed_quality_queries(const std::vector<Box3D>& boxes,
                                          const std::vector<double>& fused_scores,
                                          const Extent& extent, const Mlp2& mlp) {
  extent.validate();
  mlp.validate();
  if (mlp.l1.in != 9) {
    throw validation_error("embed_quality_queries: MLP input width must be 9");
  }
  if (boxes.size() != fused_scores.size()) {
    throw validation_error("embed_quality_queries: boxes/scores length mismatch");
  }
  const int channels = mlp.l2.out;
  std::vector<double> out(boxes.size() * channels);
  std::array<double, 9> input;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto enc = encode_box(boxes[i], extent);
    std::copy(enc.begin(), enc.end(), input.begin());
    input[8] = fused_scores[i];
    mlp.apply(input, std::span<double>(out.data() + i * channels, channels));
  }
  return out;
}

}  // namespace seed
