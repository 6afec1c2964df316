#pragma once

#include <vector>

#include "seed/bev.hpp"
#include "seed/nn.hpp"
#include "seed/queryset.hpp"

namespace seed {

// Per-cell foreground/background scorer: C -> hidden -> 1 with ReLU between
// and sigmoid output.
struct MaskPredictorParams {
  Mlp2 mlp;

  void validate(int channels) const;
};

struct DqsConfig {
  double foreground_ratio = 0.3;  // r, in (0, 1]
  int num_fine = 1000;            // N_f >= 1
  double score_threshold = 0.2;   // tau, in [0, 1)
  double beta = 0.68;             // quality fusion exponent, in (0, 1)

  void validate() const;
};

// Per-axis scene range (meters), used to normalize box encodings.
struct Extent {
  double x = 100.0;
  double y = 100.0;
  double z = 10.0;

  void validate() const;
};

// Per-cell foreground scores over all H*W cells, row-major.
std::vector<double> mask_scores(const BevFeatureMap& map, const MaskPredictorParams& params);

// One query per cell of the map, flat_indices 0..H*W-1.
QuerySet flatten_bev(const BevFeatureMap& map);

// Top max(1, floor(H*W*r)) queries by score, ties to the lower flat index.
// Output is ordered by (score desc, flat index asc) and carries cls_scores.
QuerySet foreground_select(const QuerySet& flattened, const std::vector<double>& s_bev,
                           double foreground_ratio);

// Fused quality score: s_c^(1-beta) * s_l^beta above the threshold, s_c below.
double quality_score(double s_c, double s_l, double beta, double tau);

// Top min(n_f, count) candidates by quality score, ties to the lower input
// index; selected queries carry fused_scores equal to their quality scores.
QuerySet quality_select(const QuerySet& candidates, int num_fine);

// Normalized box encoding (x, y, z, l, w, h, sin theta, cos theta); centers
// and sizes divided per-axis by the scene extent.
std::array<double, 8> encode_box(const Box3D& box, const Extent& extent);

// Geometric-aware query embedding: MLP over (box encoding, fused score),
// input width 9, output width C. Row i depends only on box i and score i.
std::vector<double> embed_quality_queries(const std::vector<Box3D>& boxes,
                                          const std::vector<double>& fused_scores,
                                          const Extent& extent, const Mlp2& mlp);

}  // namespace seed
