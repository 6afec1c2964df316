#include "seed/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seed/error.hpp"
#include "seed/matcher.hpp"
#include "seed/rng.hpp"
#include "seed/threading.hpp"

namespace seed {

namespace {

bool point_in_box_bev(const Box3D& box, double px, double py) {
  const double dx = px - box.x;
  const double dy = py - box.y;
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= 0.5 * box.l && std::abs(v) <= 0.5 * box.w;
}

Box3D random_box(Xoshiro256& rng) {
  return Box3D::make(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-1.0, 1.0),
                     rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), rng.uniform(0.5, 3.0),
                     rng.uniform(-3.2, 3.2));
}

BevFeatureMap random_map(Xoshiro256& rng, int h, int w, int c) {
  BevFeatureMap map = BevFeatureMap::zeros(h, w, c);
  for (auto& v : map.data) v = rng.uniform(-2.0, 2.0);
  return map;
}

}  // namespace

double monte_carlo_bev_iou(const Box3D& a, const Box3D& b, std::uint64_t seed,
                           std::size_t samples) {
  if (samples == 0) throw validation_error("monte_carlo_bev_iou: needs samples");
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x, max_x = -min_x, max_y = -min_x;
  for (const Box3D* box : {&a, &b}) {
    for (const Vec2& p : box_corners_bev(*box).vertices) {
      min_x = std::min(min_x, p.x);
      min_y = std::min(min_y, p.y);
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  }
  Xoshiro256 rng(seed);
  std::size_t in_a = 0, in_b = 0, in_both = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double px = rng.uniform(min_x, max_x);
    const double py = rng.uniform(min_y, max_y);
    const bool pa = point_in_box_bev(a, px, py);
    const bool pb = point_in_box_bev(b, px, py);
    in_a += pa;
    in_b += pb;
    in_both += pa && pb;
  }
  const std::size_t in_union = in_a + in_b - in_both;
  if (in_union == 0) return 0.0;
  return static_cast<double>(in_both) / static_cast<double>(in_union);
}

std::vector<double> finite_difference_sample_gradient(const BevFeatureMap& map,
                                                      const FeatureCoord& rc, double step) {
  const int c = map.channels;
  std::vector<double> grad(static_cast<std::size_t>(c) * 2);
  const auto rp = bilinear_sample(map, {rc.row + step, rc.col});
  const auto rm = bilinear_sample(map, {rc.row - step, rc.col});
  const auto cp = bilinear_sample(map, {rc.row, rc.col + step});
  const auto cm = bilinear_sample(map, {rc.row, rc.col - step});
  for (int ch = 0; ch < c; ++ch) {
    grad[static_cast<std::size_t>(ch) * 2 + 0] = (rp[ch] - rm[ch]) / (2.0 * step);
    grad[static_cast<std::size_t>(ch) * 2 + 1] = (cp[ch] - cm[ch]) / (2.0 * step);
  }
  return grad;
}

std::vector<double> box_attention_reference(const QuerySet& queries, const BevFeatureMap& map,
                                            const DgaParams& params) {
  queries.validate();
  params.validate(queries.channels);
  if (!queries.has_boxes()) {
    throw validation_error("box_attention_reference: queries must carry boxes");
  }
  const int n = queries.count;
  const int c = queries.channels;
  const int heads = params.heads;
  const int K = params.grid_points();
  const int slice = c / heads;

  std::vector<double> out(static_cast<std::size_t>(n) * c);
  std::vector<double> logits(K), weights(K), value(c), mixed(c);
  for (int qi = 0; qi < n; ++qi) {
    const auto query = queries.row(qi);
    const auto grid = grid_reference_points(queries.boxes[qi], params.grid_side);
    const std::vector<double> all_logits = params.weight_proj.apply(query);
    std::fill(mixed.begin(), mixed.end(), 0.0);
    for (int m = 0; m < heads; ++m) {
      std::copy(all_logits.begin() + static_cast<std::size_t>(m) * K,
                all_logits.begin() + static_cast<std::size_t>(m + 1) * K, logits.begin());
      softmax(logits, weights);
      for (int j = 0; j < K; ++j) {
        const auto sampled =
            bilinear_sample(map, world_to_feature(map, grid[j].x, grid[j].y));
        params.value_proj.apply(sampled, value);
        for (int t = 0; t < slice; ++t) {
          mixed[static_cast<std::size_t>(m) * slice + t] += weights[j] * value[m * slice + t];
        }
      }
    }
    params.output_proj.apply(mixed,
                             std::span<double>(out.data() + static_cast<std::size_t>(qi) * c, c));
  }
  return out;
}

bool OracleReport::passed() const {
  for (const auto& s : suites) {
    if (s.failures > 0) return false;
  }
  return true;
}

namespace {

OracleSuiteResult hungarian_suite(std::uint64_t seed, int trials, bool inject_bug) {
  OracleSuiteResult res{"hungarian_vs_brute_force"};
  Xoshiro256 rng(splitmix64(seed));
  const int matrices = std::max(1, trials * 10);
  for (int t = 0; t < matrices; ++t) {
    const int g = 1 + static_cast<int>(rng.next() % 7);
    const int n = g + static_cast<int>(rng.next() % static_cast<std::uint64_t>(8 - g));
    std::vector<double> cost(static_cast<std::size_t>(n) * g);
    for (auto& v : cost) v = rng.uniform(-5.0, 5.0);
    Assignment fast = hungarian_solve(cost, n, g);
    const Assignment exact = brute_force_assignment(cost, n, g);
    if (inject_bug && t == 0) fast.total_cost += 1e-3;
    const double err = std::abs(fast.total_cost - exact.total_cost);
    res.max_error = std::max(res.max_error, err);
    ++res.cases;
    if (err > 1e-9 || fast.pairs != exact.pairs) ++res.failures;
  }
  return res;
}

OracleSuiteResult iou_suite(std::uint64_t seed, int trials) {
  OracleSuiteResult res{"bev_iou_vs_monte_carlo"};
  Xoshiro256 rng(splitmix64(seed) ^ 0x1234567ULL);
  const int pairs = std::max(1, trials);
  std::vector<double> errs(pairs);
  std::vector<std::uint64_t> seeds(pairs);
  std::vector<Box3D> as(pairs), bs(pairs);
  for (int t = 0; t < pairs; ++t) {
    as[t] = random_box(rng);
    Box3D b = random_box(rng);
    // Nudge the second box toward the first so overlaps are common.
    b.x = as[t].x + rng.uniform(-2.0, 2.0);
    b.y = as[t].y + rng.uniform(-2.0, 2.0);
    bs[t] = b;
    seeds[t] = rng.next();
  }
  parallel_for(static_cast<std::size_t>(pairs), [&](std::size_t t) {
    const double analytic = bev_iou(as[t], bs[t]);
    const double sampled = monte_carlo_bev_iou(as[t], bs[t], seeds[t], 1000000);
    errs[t] = std::abs(analytic - sampled);
  });
  for (int t = 0; t < pairs; ++t) {
    res.max_error = std::max(res.max_error, errs[t]);
    ++res.cases;
    if (errs[t] > 3e-3) ++res.failures;
  }
  return res;
}

OracleSuiteResult gradient_suite(std::uint64_t seed, int trials) {
  OracleSuiteResult res{"jacobian_vs_finite_differences"};
  Xoshiro256 rng(splitmix64(seed) ^ 0xabcdefULL);
  const int points = std::max(1, trials * 10);
  BevFeatureMap map = random_map(rng, 12, 14, 3);
  const double step = 1e-4;
  for (int t = 0; t < points; ++t) {
    FeatureCoord rc{rng.uniform(1.0, map.height - 2.0), rng.uniform(1.0, map.width - 2.0)};
    // Stay away from lattice lines so the analytic derivative is two-sided.
    auto frac_ok = [](double v) {
      const double f = v - std::floor(v);
      return f > 1e-3 && f < 1.0 - 1e-3;
    };
    if (!frac_ok(rc.row) || !frac_ok(rc.col)) {
      --t;
      continue;
    }
    const SampleJacobian jac = bilinear_sample_jacobian(map, rc);
    const auto fd = finite_difference_sample_gradient(map, rc, step);
    ++res.cases;
    bool bad = false;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double denom = std::max(std::abs(fd[i]), 1e-7);
      const double rel = std::abs(jac.d[i] - fd[i]) / denom;
      res.max_error = std::max(res.max_error, rel);
      if (rel > 1e-4) bad = true;
    }
    if (bad) ++res.failures;
  }
  return res;
}

OracleSuiteResult dga_suite(std::uint64_t seed, int trials) {
  OracleSuiteResult res{"dga_zero_offset_vs_box_attention"};
  Xoshiro256 rng(splitmix64(seed) ^ 0xfeedULL);
  const int instances = std::max(1, trials);
  for (int t = 0; t < instances; ++t) {
    const int c = 8;
    BevFeatureMap map = random_map(rng, 10, 10, c);
    map.origin_x = -4.5;
    map.origin_y = -4.5;
    DgaParams params = DgaParams::seeded(c, 3, 2, rng.next(), "oracle.dga");
    std::fill(params.offset_proj.weight.begin(), params.offset_proj.weight.end(), 0.0);
    std::fill(params.offset_proj.bias.begin(), params.offset_proj.bias.end(), 0.0);
    QuerySet qs = QuerySet::empty(c);
    qs.count = 4;
    qs.features.resize(static_cast<std::size_t>(qs.count) * c);
    for (auto& v : qs.features) v = rng.uniform(-1.0, 1.0);
    qs.flat_indices.assign(qs.count, kSyntheticIndex);
    for (int i = 0; i < qs.count; ++i) qs.boxes.push_back(random_box(rng));
    const auto fast = dga_forward(qs, map, params);
    const auto ref = box_attention_reference(qs, map, params);
    ++res.cases;
    double err = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) err = std::max(err, std::abs(fast[i] - ref[i]));
    res.max_error = std::max(res.max_error, err);
    if (err > 1e-12) ++res.failures;
  }
  return res;
}

}  // namespace

OracleReport run_oracle_suites(std::uint64_t seed, int trials, bool inject_bug) {
  if (trials < 1) throw validation_error("run_oracle_suites: trials must be >= 1");
  OracleReport report;
  report.suites.push_back(hungarian_suite(seed, trials, inject_bug));
  report.suites.push_back(iou_suite(seed, trials));
  report.suites.push_back(gradient_suite(seed, trials));
  report.suites.push_back(dga_suite(seed, trials));
  return report;
}

}  // namespace seed
