#include "seed/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seed/error.hpp"
#include "seed/threading.hpp"

namespace seed {

namespace {

constexpr double kScoreClamp = 1e-7;
constexpr double kCostTol = 1e-9;

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

double tolerance_for(double reference) {
  return kCostTol * std::max(1.0, std::abs(reference));
}

// Minimum cost of matching every listed ground truth to a distinct listed
// query (gts <= queries), shortest-augmenting-path formulation with
// potentials. The matrix is query-major: cost[query * stride + gt].
double assignment_cost(const std::vector<double>& cost, int stride,
                       const std::vector<int>& gt_ids, const std::vector<int>& query_ids) {
  const int n = static_cast<int>(gt_ids.size());
  const int m = static_cast<int>(query_ids.size());
  if (n == 0) return 0.0;

  auto entry = [&](int gt_slot, int query_slot) {
    return cost[static_cast<std::size_t>(query_ids[query_slot - 1]) * stride +
                gt_ids[gt_slot - 1]];
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = entry(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    total += entry(p[j], j);
  }
  return total;
}

void check_matrix(const std::vector<double>& cost, int num_queries, int num_gts) {
  if (num_queries < 1 || num_gts < 1) {
    throw validation_error("assignment: matrix must be at least 1x1");
  }
  if (cost.size() != static_cast<std::size_t>(num_queries) * num_gts) {
    throw validation_error("assignment: cost length != N*G");
  }
  for (double v : cost) {
    if (!std::isfinite(v)) throw validation_error("assignment: non-finite cost entry");
  }
}

}  // namespace

void CostWeights::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("CostWeights: alpha in (0, 1)");
  if (!(gamma >= 0.0)) throw validation_error("CostWeights: gamma must be >= 0");
  if (lambda_cls < 0.0 || lambda_reg < 0.0 || lambda_giou < 0.0) {
    throw validation_error("CostWeights: lambdas must be nonnegative");
  }
}

double cls_cost(double fused_score, const CostWeights& weights) {
  const double s = clamp_score(fused_score);
  const double c_pos = -(1.0 - weights.alpha) * std::pow(s, weights.gamma) * std::log(1.0 - s);
  const double c_neg = -weights.alpha * std::pow(1.0 - s, weights.gamma) * std::log(s);
  return c_pos - c_neg;
}

double reg_cost(const Box3D& pred, const Box3D& gt, const Extent& extent) {
  extent.validate();
  const auto a = encode_box(pred, extent);
  const auto b = encode_box(gt, extent);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

double giou_cost(const Box3D& pred, const Box3D& gt) { return -giou_bev(pred, gt); }

std::vector<double> cost_matrix(const QuerySet& preds, const std::vector<Box3D>& gts,
                                const CostWeights& weights, const Extent& extent) {
  preds.validate();
  weights.validate();
  if (preds.count < 1 || gts.empty()) {
    throw validation_error("cost_matrix: needs at least one query and one ground truth");
  }
  if (!preds.has_boxes() || preds.fused_scores.empty()) {
    throw validation_error("cost_matrix: queries need boxes and fused scores");
  }
  const int n = preds.count;
  const int g = static_cast<int>(gts.size());
  std::vector<double> cost(static_cast<std::size_t>(n) * g);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const double cls = weights.lambda_cls * cls_cost(preds.fused_scores[i], weights);
    for (int j = 0; j < g; ++j) {
      cost[i * g + j] = cls + weights.lambda_reg * reg_cost(preds.boxes[i], gts[j], extent) +
                        weights.lambda_giou * giou_cost(preds.boxes[i], gts[j]);
    }
  });
  return cost;
}

Assignment hungarian_solve(const std::vector<double>& cost, int num_queries, int num_gts) {
  check_matrix(cost, num_queries, num_gts);
  if (num_queries < num_gts) {
    throw validation_error("hungarian_solve: more ground truths than queries");
  }

  std::vector<int> query_ids(num_queries), gt_ids(num_gts);
  std::iota(query_ids.begin(), query_ids.end(), 0);
  std::iota(gt_ids.begin(), gt_ids.end(), 0);
  // Ground truths as the outer (smaller) side.
  const double optimal = assignment_cost(cost, num_gts, gt_ids, query_ids);
  const double tol = tolerance_for(optimal);

  // Lexicographic tie-break: scan queries ascending and lock (i, g) with the
  // smallest g whose fixed completion still reaches the optimal total. A query
  // with no such g is unmatched in every optimum, so later completions never
  // need it again.
  Assignment result;
  std::vector<char> gt_available(num_gts, 1);
  double locked_cost = 0.0;
  int remaining = num_gts;
  for (int i = 0; i < num_queries && remaining > 0; ++i) {
    std::vector<int> rows;
    rows.reserve(num_queries - i - 1);
    for (int qq = i + 1; qq < num_queries; ++qq) rows.push_back(qq);
    for (int g = 0; g < num_gts; ++g) {
      if (!gt_available[g]) continue;
      std::vector<int> cols;
      cols.reserve(remaining - 1);
      for (int gg = 0; gg < num_gts; ++gg) {
        if (gt_available[gg] && gg != g) cols.push_back(gg);
      }
      if (static_cast<int>(rows.size()) < static_cast<int>(cols.size())) continue;
      const double rest = assignment_cost(cost, num_gts, cols, rows);
      const double total =
          locked_cost + cost[static_cast<std::size_t>(i) * num_gts + g] + rest;
      if (std::abs(total - optimal) <= tol) {
        result.pairs.emplace_back(i, g);
        locked_cost += cost[static_cast<std::size_t>(i) * num_gts + g];
        gt_available[g] = 0;
        --remaining;
        break;
      }
    }
  }

  if (remaining != 0) {
    throw validation_error("hungarian_solve: internal tie-break failure");
  }
  result.total_cost = locked_cost;
  return result;
}

namespace {

void enumerate_injections(const std::vector<double>& cost, int num_queries, int num_gts,
                          int gt, std::vector<int>& picked, std::vector<char>& used,
                          double partial, Assignment& best, bool& has_best) {
  if (gt == num_gts) {
    Assignment cand;
    cand.total_cost = partial;
    for (int g = 0; g < num_gts; ++g) cand.pairs.emplace_back(picked[g], g);
    std::sort(cand.pairs.begin(), cand.pairs.end());
    if (!has_best) {
      best = cand;
      has_best = true;
      return;
    }
    const double tol = tolerance_for(std::min(best.total_cost, cand.total_cost));
    if (cand.total_cost < best.total_cost - tol) {
      best = cand;
    } else if (std::abs(cand.total_cost - best.total_cost) <= tol &&
               cand.pairs < best.pairs) {
      best.pairs = cand.pairs;
      best.total_cost = std::min(best.total_cost, cand.total_cost);
    }
    return;
  }
  for (int q = 0; q < num_queries; ++q) {
    if (used[q]) continue;
    used[q] = 1;
    picked[gt] = q;
    enumerate_injections(cost, num_queries, num_gts, gt + 1, picked, used,
                         partial + cost[static_cast<std::size_t>(q) * num_gts + gt], best,
                         has_best);
    used[q] = 0;
  }
}

}  // namespace

Assignment brute_force_assignment(const std::vector<double>& cost, int num_queries,
                                  int num_gts) {
  check_matrix(cost, num_queries, num_gts);
  if (num_queries < num_gts) {
    throw validation_error("brute_force_assignment: more ground truths than queries");
  }
  if (num_gts > 8) {
    throw validation_error("brute_force_assignment: G must be <= 8");
  }
  Assignment best;
  bool has_best = false;
  std::vector<int> picked(num_gts, -1);
  std::vector<char> used(num_queries, 0);
  enumerate_injections(cost, num_queries, num_gts, 0, picked, used, 0.0, best, has_best);
  return best;
}

DqsLossValues dqs_loss_values(const QuerySet& proposals, const std::vector<Box3D>& gts,
                              const Assignment& assignment, const Extent& extent) {
  proposals.validate();
  if (proposals.count == 0) throw validation_error("dqs_loss_values: empty proposal set");
  if (proposals.cls_scores.empty() || proposals.loc_scores.empty() || !proposals.has_boxes()) {
    throw validation_error("dqs_loss_values: proposals need cls/loc scores and boxes");
  }
  std::vector<int> matched_gt(proposals.count, -1);
  for (const auto& [q, g] : assignment.pairs) {
    if (q < 0 || q >= proposals.count || g < 0 || g >= static_cast<int>(gts.size())) {
      throw validation_error("dqs_loss_values: assignment index out of range");
    }
    if (matched_gt[q] != -1) throw validation_error("dqs_loss_values: duplicate query");
    matched_gt[q] = g;
  }

  DqsLossValues out;
  for (int i = 0; i < proposals.count; ++i) {
    const double s = clamp_score(proposals.cls_scores[i]);
    out.bce_cls += matched_gt[i] >= 0 ? -std::log(s) : -std::log(1.0 - s);
  }
  out.bce_cls /= proposals.count;

  if (!assignment.pairs.empty()) {
    double smooth_acc = 0.0;
    for (const auto& [q, g] : assignment.pairs) {
      out.loc_l1 += std::abs(proposals.loc_scores[q] - iou_3d(proposals.boxes[q], gts[g]));
      const auto a = encode_box(proposals.boxes[q], extent);
      const auto b = encode_box(gts[g], extent);
      for (int t = 0; t < 8; ++t) {
        const double d = std::abs(a[t] - b[t]);
        smooth_acc += d < 1.0 ? 0.5 * d * d : d - 0.5;
      }
    }
    out.loc_l1 /= static_cast<double>(assignment.pairs.size());
    out.box_smooth_l1 = smooth_acc / static_cast<double>(assignment.pairs.size());
  }
  return out;
}

}  // namespace seed
