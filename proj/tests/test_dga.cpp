#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seed/dga.hpp"
#include "seed/error.hpp"
#include "seed/oracles.hpp"
#include "seed/rng.hpp"

using namespace seed;

namespace {

BevFeatureMap random_map(Xoshiro256& rng, int h, int w, int c, double origin = 0.0) {
  BevFeatureMap map = BevFeatureMap::zeros(h, w, c);
  map.origin_x = origin;
  map.origin_y = origin;
  for (auto& v : map.data) v = rng.uniform(-2.0, 2.0);
  return map;
}

QuerySet random_queries(Xoshiro256& rng, int n, int c, double center_lo, double center_hi) {
  QuerySet qs = QuerySet::empty(c);
  qs.count = n;
  qs.features.resize(static_cast<std::size_t>(n) * c);
  for (auto& v : qs.features) v = rng.uniform(-1.0, 1.0);
  qs.flat_indices.assign(n, kSyntheticIndex);
  for (int i = 0; i < n; ++i) {
    qs.boxes.push_back(Box3D::make(rng.uniform(center_lo, center_hi),
                                   rng.uniform(center_lo, center_hi), 0.0,
                                   rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0), 1.5,
                                   rng.uniform(-3.0, 3.0)));
  }
  return qs;
}

}  // namespace

TEST_CASE("offset prediction is the linear projection") {
  const int c = 8;
  DgaParams params = DgaParams::seeded(c, 2, 2, 5, "t.dga");
  std::vector<double> q1(c), q2(c);
  Xoshiro256 rng(41);
  for (auto& v : q1) v = rng.uniform(-1, 1);
  for (auto& v : q2) v = rng.uniform(-1, 1);

  SUBCASE("zero projection gives zero offsets") {
    DgaParams zeroed = params;
    std::fill(zeroed.offset_proj.weight.begin(), zeroed.offset_proj.weight.end(), 0.0);
    std::fill(zeroed.offset_proj.bias.begin(), zeroed.offset_proj.bias.end(), 0.0);
    for (double v : predict_offsets(q1, zeroed)) CHECK(v == 0.0);
  }

  SUBCASE("additive and homogeneous with zero bias") {
    DgaParams nobias = params;
    std::fill(nobias.offset_proj.bias.begin(), nobias.offset_proj.bias.end(), 0.0);
    std::vector<double> sum(c);
    for (int i = 0; i < c; ++i) sum[i] = q1[i] + q2[i];
    const auto o1 = predict_offsets(q1, nobias);
    const auto o2 = predict_offsets(q2, nobias);
    const auto os = predict_offsets(sum, nobias);
    std::vector<double> twice(c);
    for (int i = 0; i < c; ++i) twice[i] = 2.0 * q1[i];
    const auto ot = predict_offsets(twice, nobias);
    for (std::size_t i = 0; i < os.size(); ++i) {
      CHECK(os[i] == doctest::Approx(o1[i] + o2[i]).epsilon(1e-12));
      CHECK(ot[i] == doctest::Approx(2.0 * o1[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention weight prediction") {
  const int c = 8;
  Xoshiro256 rng(42);
  std::vector<double> q(c);
  for (auto& v : q) v = rng.uniform(-1, 1);

  SUBCASE("zero projection gives uniform weights per head") {
    DgaParams params = DgaParams::seeded(c, 3, 2, 6, "t.dga");
    std::fill(params.weight_proj.weight.begin(), params.weight_proj.weight.end(), 0.0);
    std::fill(params.weight_proj.bias.begin(), params.weight_proj.bias.end(), 0.0);
    for (double w : predict_weights(q, params)) {
      CHECK(w == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    }
  }

  SUBCASE("per-head softmax sums to one and stays positive") {
    DgaParams params = DgaParams::seeded(c, 3, 2, 7, "t.dga");
    const auto w = predict_weights(q, params);
    for (int m = 0; m < 2; ++m) {
      double sum = 0.0;
      for (int j = 0; j < 9; ++j) {
        CHECK(w[m * 9 + j] > 0.0);
        sum += w[m * 9 + j];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("shifting one head's logits leaves its weights unchanged") {
    DgaParams params = DgaParams::seeded(c, 2, 2, 8, "t.dga");
    const auto base = predict_weights(q, params);
    DgaParams shifted = params;
    for (int j = 0; j < 4; ++j) shifted.weight_proj.bias[j] += 11.0;  // head 0 only
    const auto moved = predict_weights(q, shifted);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(std::abs(base[i] - moved[i]) <= 1e-12);
    }
  }

  SUBCASE("a dominant logit saturates its position") {
    DgaParams params = DgaParams::seeded(c, 2, 1, 9, "t.dga");
    std::fill(params.weight_proj.weight.begin(), params.weight_proj.weight.end(), 0.0);
    std::fill(params.weight_proj.bias.begin(), params.weight_proj.bias.end(), 0.0);
    params.weight_proj.bias[2] = 40.0;
    const auto w = predict_weights(q, params);
    CHECK(w[2] >= 1.0 - 1e-12);
  }
}

TEST_CASE("dga forward") {
  Xoshiro256 rng(43);

  SUBCASE("zero offsets reproduce box attention exactly") {
    for (int t = 0; t < 10; ++t) {
      const int c = 8;
      BevFeatureMap map = random_map(rng, 12, 12, c, -5.5);
      DgaParams params = DgaParams::seeded(c, 3, 2, rng.next(), "t.dga");
      std::fill(params.offset_proj.weight.begin(), params.offset_proj.weight.end(), 0.0);
      std::fill(params.offset_proj.bias.begin(), params.offset_proj.bias.end(), 0.0);
      const QuerySet qs = random_queries(rng, 5, c, -3.0, 3.0);
      const auto fast = dga_forward(qs, map, params);
      const auto ref = box_attention_reference(qs, map, params);
      for (std::size_t i = 0; i < fast.size(); ++i) {
        CHECK(std::abs(fast[i] - ref[i]) <= 1e-12);
      }
    }
  }

  SUBCASE("constant map with identity projections passes the constant through") {
    const int c = 8;
    BevFeatureMap map = BevFeatureMap::zeros(40, 40, c);
    map.origin_x = -19.5;
    map.origin_y = -19.5;
    const double v = -1.75;
    for (auto& x : map.data) x = v;
    DgaParams params = DgaParams::seeded(c, 3, 2, 10, "t.dga");
    params.value_proj = Linear::identity(c);
    params.output_proj = Linear::identity(c);
    const QuerySet qs = random_queries(rng, 6, c, -2.0, 2.0);
    for (double out : dga_forward(qs, map, params)) {
      CHECK(out == doctest::Approx(v).epsilon(1e-12));
    }
  }

  SUBCASE("single grid point degenerates to a projected center sample") {
    const int c = 8;
    BevFeatureMap map = random_map(rng, 10, 10, c, -4.5);
    DgaParams params = DgaParams::seeded(c, 1, 2, 11, "t.dga");
    std::fill(params.offset_proj.weight.begin(), params.offset_proj.weight.end(), 0.0);
    std::fill(params.offset_proj.bias.begin(), params.offset_proj.bias.end(), 0.0);
    QuerySet qs = random_queries(rng, 1, c, -2.0, 2.0);
    const auto out = dga_forward(qs, map, params);
    const auto center =
        bilinear_sample(map, world_to_feature(map, qs.boxes[0].x, qs.boxes[0].y));
    const auto expected = params.output_proj.apply(params.value_proj.apply(center));
    for (int ch = 0; ch < c; ++ch) CHECK(out[ch] == doctest::Approx(expected[ch]).epsilon(1e-13));
  }

  SUBCASE("rows are independent and permutation-equivariant") {
    const int c = 8;
    const BevFeatureMap map = random_map(rng, 12, 12, c, -5.5);
    const DgaParams params = DgaParams::seeded(c, 2, 2, 12, "t.dga");
    QuerySet qs = random_queries(rng, 6, c, -3.0, 3.0);
    const auto base = dga_forward(qs, map, params);
    QuerySet rev = qs;
    for (int i = 0; i < 6; ++i) {
      std::copy(qs.row(5 - i).begin(), qs.row(5 - i).end(), rev.row(i).begin());
      rev.boxes[i] = qs.boxes[5 - i];
    }
    const auto flipped = dga_forward(rev, map, params);
    for (int i = 0; i < 6; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        CHECK(std::abs(base[static_cast<std::size_t>(5 - i) * c + ch] -
                       flipped[static_cast<std::size_t>(i) * c + ch]) <= 1e-12);
      }
    }
  }

  SUBCASE("identity projections keep outputs inside the sampled hull") {
    const int c = 8;
    const BevFeatureMap map = random_map(rng, 12, 12, c, -5.5);
    DgaParams params = DgaParams::seeded(c, 3, 2, 13, "t.dga");
    params.value_proj = Linear::identity(c);
    params.output_proj = Linear::identity(c);
    const QuerySet qs = random_queries(rng, 4, c, -3.0, 3.0);
    DgaTrace trace;
    const auto out = dga_forward(qs, map, params, &trace);
    const int K = params.grid_points();
    const int slice = c / params.heads;
    for (int qi = 0; qi < qs.count; ++qi) {
      for (int ch = 0; ch < c; ++ch) {
        const int m = ch / slice;
        double lo = 1e300, hi = -1e300;
        for (int j = 0; j < K; ++j) {
          const std::size_t base_idx =
              ((static_cast<std::size_t>(qi) * params.heads + m) * K + j) * 2;
          const FeatureCoord rc = world_to_feature(
              map, trace.positions[base_idx], trace.positions[base_idx + 1]);
          const double f = bilinear_sample(map, rc)[ch];
          lo = std::min(lo, f);
          hi = std::max(hi, f);
        }
        const double v = out[static_cast<std::size_t>(qi) * c + ch];
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
      }
    }
  }

  SUBCASE("cells far from every sampling position do not matter") {
    const int c = 4;
    BevFeatureMap map = random_map(rng, 16, 16, c, -7.5);
    const DgaParams params = DgaParams::seeded(c, 2, 2, 14, "t.dga");
    const QuerySet qs = random_queries(rng, 1, c, -1.0, 1.0);
    DgaTrace trace;
    const auto base = dga_forward(qs, map, params, &trace);

    BevFeatureMap wrecked = map;
    const int K = params.grid_points();
    for (int r = 0; r < 16; ++r) {
      for (int col = 0; col < 16; ++col) {
        bool near = false;
        for (int m = 0; m < params.heads && !near; ++m) {
          for (int j = 0; j < K && !near; ++j) {
            const std::size_t idx = ((static_cast<std::size_t>(m)) * K + j) * 2;
            const FeatureCoord rc = world_to_feature(map, trace.positions[idx],
                                                     trace.positions[idx + 1]);
            if (std::abs(rc.row - r) <= 2.0 && std::abs(rc.col - col) <= 2.0) near = true;
          }
        }
        if (!near) {
          for (int ch = 0; ch < c; ++ch) wrecked.at(r, col, ch) = 999.0;
        }
      }
    }
    const auto after = dga_forward(qs, wrecked, params);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(after[i] == base[i]);
  }

  SUBCASE("missing boxes are rejected") {
    const int c = 4;
    const BevFeatureMap map = random_map(rng, 8, 8, c);
    const DgaParams params = DgaParams::seeded(c, 2, 2, 15, "t.dga");
    QuerySet qs = random_queries(rng, 2, c, 0.0, 4.0);
    qs.boxes.clear();
    CHECK_THROWS_AS(dga_forward(qs, map, params), validation_error);
  }
}

TEST_CASE("offset gradients agree with finite differences through the chain rule") {
  Xoshiro256 rng(44);
  const int c = 8;
  const int heads = 2;
  const int k = 2;
  const int K = k * k;
  const int slice = c / heads;

  int tested = 0;
  while (tested < 12) {
    const BevFeatureMap map = random_map(rng, 14, 14, c, -6.5);
    DgaParams params = DgaParams::seeded(c, k, heads, rng.next(), "t.dga");
    const QuerySet qs = random_queries(rng, 1, c, -3.0, 3.0);

    DgaTrace trace;
    dga_forward(qs, map, params, &trace);
    // Re-draw when any sampling position sits near a lattice line.
    bool clean = true;
    for (int m = 0; m < heads && clean; ++m) {
      for (int j = 0; j < K && clean; ++j) {
        const std::size_t idx = (static_cast<std::size_t>(m) * K + j) * 2;
        const FeatureCoord rc =
            world_to_feature(map, trace.positions[idx], trace.positions[idx + 1]);
        auto frac = [](double v) { return v - std::floor(v); };
        if (frac(rc.row) < 1e-3 || frac(rc.row) > 1.0 - 1e-3 || frac(rc.col) < 1e-3 ||
            frac(rc.col) > 1.0 - 1e-3) {
          clean = false;
        }
      }
    }
    if (!clean) continue;
    ++tested;

    const int m = static_cast<int>(rng.next() % heads);
    const int j = static_cast<int>(rng.next() % K);
    const int axis = static_cast<int>(rng.next() % 2);

    // Analytic: chain rule through the bilinear sample at the perturbed point.
    const std::size_t pos_idx = (static_cast<std::size_t>(m) * K + j) * 2;
    const FeatureCoord rc =
        world_to_feature(map, trace.positions[pos_idx], trace.positions[pos_idx + 1]);
    const SampleJacobian jac = bilinear_sample_jacobian(map, rc);
    std::vector<double> df(c);
    for (int ch = 0; ch < c; ++ch) {
      df[ch] = axis == 0 ? jac.at(ch, 1) / map.cell_size_x
                         : jac.at(ch, 0) / map.cell_size_y;
    }
    const double a = trace.weights[static_cast<std::size_t>(m) * K + j];
    std::vector<double> dmixed(c, 0.0);
    for (int t = 0; t < slice; ++t) {
      const int row = m * slice + t;
      double acc = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        acc += params.value_proj.weight[static_cast<std::size_t>(row) * c + ch] * df[ch];
      }
      dmixed[row] = a * acc;
    }
    std::vector<double> analytic(c, 0.0);
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int t = 0; t < c; ++t) {
        acc += params.output_proj.weight[static_cast<std::size_t>(ch) * c + t] * dmixed[t];
      }
      analytic[ch] = acc;
    }

    // Central differences through the offset bias.
    const double h = 1e-4;
    const std::size_t bias_idx = (static_cast<std::size_t>(m) * K + j) * 2 + axis;
    DgaParams plus = params, minus = params;
    plus.offset_proj.bias[bias_idx] += h;
    minus.offset_proj.bias[bias_idx] -= h;
    const auto out_plus = dga_forward(qs, map, plus);
    const auto out_minus = dga_forward(qs, map, minus);
    for (int ch = 0; ch < c; ++ch) {
      const double fd = (out_plus[ch] - out_minus[ch]) / (2.0 * h);
      const double rel = std::abs(analytic[ch] - fd) / std::max(std::abs(fd), 1e-7);
      CHECK(rel <= 1e-4);
    }
  }
}
