#pragma once

#include <vector>

#include "seed/boxgeom.hpp"
#include "seed/dqs.hpp"
#include "seed/queryset.hpp"

namespace seed {

struct CostWeights {
  double alpha = 0.25;       // focal balance, in (0, 1)
  double gamma = 2.0;        // focal exponent, >= 0
  double lambda_cls = 1.0;
  double lambda_reg = 2.0;
  double lambda_giou = 4.0;

  void validate() const;
};

// Query <-> ground-truth pairing. pairs are (query, gt), sorted by query index;
// every ground truth is matched when #queries >= #ground truths.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;
  double total_cost = 0.0;
};

// Focal-style classification cost from the fused quality score; the score is
// clamped to [1e-7, 1 - 1e-7] before any logarithm.
double cls_cost(double fused_score, const CostWeights& weights);

// L1 over the extent-normalized 8-vector encoding (encode_box).
double reg_cost(const Box3D& pred, const Box3D& gt, const Extent& extent);

// Negated rotated-footprint GIoU, in [-1, 1).
double giou_cost(const Box3D& pred, const Box3D& gt);

// N x G row-major matching costs. The classification term depends only on the
// query, so it is constant across each row's ground truths.
std::vector<double> cost_matrix(const QuerySet& preds, const std::vector<Box3D>& gts,
                                const CostWeights& weights, const Extent& extent);

// Exact minimum-cost injection of ground truths into queries (N >= G), with
// the lexicographically smallest pair list among cost-optimal solutions.
Assignment hungarian_solve(const std::vector<double>& cost, int num_queries, int num_gts);

// Exhaustive minimum over all injections, same tie-break rule. G <= 8.
Assignment brute_force_assignment(const std::vector<double>& cost, int num_queries,
                                  int num_gts);

struct DqsLossValues {
  double bce_cls = 0.0;       // binary cross-entropy of cls scores vs matched/unmatched
  double loc_l1 = 0.0;        // |loc score - true 3D IoU| over matched pairs
  double box_smooth_l1 = 0.0; // smooth-L1 over the 8-vector encoding, matched pairs
};

DqsLossValues dqs_loss_values(const QuerySet& proposals, const std::vector<Box3D>& gts,
                              const Assignment& assignment, const Extent& extent);

}  // namespace seed
