#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seed/bev.hpp"
#include "seed/dqs.hpp"
#include "seed/error.hpp"
#include "seed/rng.hpp"

using namespace seed;

namespace {

QuerySet make_candidates(int n, int channels, Xoshiro256& rng) {
  QuerySet qs = QuerySet::empty(channels);
  qs.count = n;
  qs.features.resize(static_cast<std::size_t>(n) * channels);
  for (auto& v : qs.features) v = rng.uniform(-1.0, 1.0);
  qs.flat_indices.resize(n);
  std::iota(qs.flat_indices.begin(), qs.flat_indices.end(), 0LL);
  for (int i = 0; i < n; ++i) {
    qs.boxes.push_back(Box3D::make(rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0, 2, 2, 2,
                                   rng.uniform(-3, 3)));
  }
  return qs;
}

}  // namespace

TEST_CASE("mask scores") {
  BevFeatureMap map = BevFeatureMap::zeros(3, 3, 4);
  Xoshiro256 rng(21);
  for (auto& v : map.data) v = rng.uniform(-1.0, 1.0);

  SUBCASE("zero parameters score one half everywhere") {
    MaskPredictorParams params{Mlp2::zeros(4, 4, 1)};
    for (double s : mask_scores(map, params)) CHECK(s == doctest::Approx(0.5));
  }

  SUBCASE("scores stay strictly inside (0, 1) and per-cell") {
    MaskPredictorParams params{Mlp2::seeded(4, 4, 1, 9, "mask")};
    // Duplicate one cell into another; their scores must agree.
    for (int ch = 0; ch < 4; ++ch) map.at(2, 2, ch) = map.at(0, 0, ch);
    const auto scores = mask_scores(map, params);
    for (double s : scores) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
    CHECK(scores[map.flat_index(0, 0)] == scores[map.flat_index(2, 2)]);
  }

  SUBCASE("channel mismatch is rejected") {
    MaskPredictorParams params{Mlp2::zeros(5, 5, 1)};
    CHECK_THROWS_AS(mask_scores(map, params), validation_error);
  }
}

TEST_CASE("foreground selection") {
  SUBCASE("proportion 0.3 of a 10x10 grid keeps 30 queries") {
    BevFeatureMap map = BevFeatureMap::zeros(10, 10, 4);
    Xoshiro256 rng(22);
    for (auto& v : map.data) v = rng.uniform(-1.0, 1.0);
    std::vector<double> scores(100);
    for (auto& s : scores) s = rng.uniform();
    const QuerySet sel = foreground_select(flatten_bev(map), scores, 0.3);
    CHECK(sel.count == 30);
    // Selected minimum beats the unselected maximum.
    double sel_min = 1.0;
    for (double s : sel.cls_scores) sel_min = std::min(sel_min, s);
    std::vector<char> chosen(100, 0);
    for (long long f : sel.flat_indices) chosen[f] = 1;
    double out_max = 0.0;
    for (int i = 0; i < 100; ++i) {
      if (!chosen[i]) out_max = std::max(out_max, scores[i]);
    }
    CHECK(sel_min >= out_max);
  }

  SUBCASE("ties go to the lower flat index") {
    BevFeatureMap map = BevFeatureMap::zeros(1, 3, 4);
    const std::vector<double> scores{0.9, 0.9, 0.1};
    const QuerySet sel = foreground_select(flatten_bev(map), scores, 1.0 / 3.0);
    REQUIRE(sel.count == 1);
    CHECK(sel.flat_indices[0] == 0);
  }

  SUBCASE("full proportion returns everything in score order") {
    BevFeatureMap map = BevFeatureMap::zeros(2, 2, 4);
    const std::vector<double> scores{0.2, 0.8, 0.5, 0.9};
    const QuerySet sel = foreground_select(flatten_bev(map), scores, 1.0);
    REQUIRE(sel.count == 4);
    CHECK(sel.flat_indices == std::vector<long long>{3, 1, 2, 0});
  }

  SUBCASE("selection is invariant to input order") {
    Xoshiro256 rng(23);
    BevFeatureMap map = BevFeatureMap::zeros(6, 6, 4);
    for (auto& v : map.data) v = rng.uniform(-1.0, 1.0);
    std::vector<double> scores(36);
    for (auto& s : scores) s = rng.uniform();
    // A handful of exact ties.
    scores[7] = scores[31] = scores[2];

    const QuerySet flat = flatten_bev(map);
    const QuerySet base = foreground_select(flat, scores, 0.25);

    std::vector<int> perm(36);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 35; i > 0; --i) std::swap(perm[i], perm[rng.next() % (i + 1)]);
    QuerySet shuffled = QuerySet::empty(4);
    shuffled.count = 36;
    shuffled.features.resize(36 * 4);
    shuffled.flat_indices.resize(36);
    std::vector<double> shuffled_scores(36);
    for (int i = 0; i < 36; ++i) {
      std::copy(flat.row(perm[i]).begin(), flat.row(perm[i]).end(), shuffled.row(i).begin());
      shuffled.flat_indices[i] = flat.flat_indices[perm[i]];
      shuffled_scores[i] = scores[perm[i]];
    }
    const QuerySet again = foreground_select(shuffled, shuffled_scores, 0.25);
    CHECK(again.flat_indices == base.flat_indices);
    CHECK(again.features == base.features);
  }

  SUBCASE("empty input is rejected") {
    QuerySet empty = QuerySet::empty(4);
    CHECK_THROWS_AS(foreground_select(empty, {}, 0.5), validation_error);
  }
}

TEST_CASE("quality score fusion") {
  SUBCASE("spot value at the default vehicle-class beta") {
    // 0.5^0.32 * 0.8^0.68 in double precision.
    CHECK(std::abs(quality_score(0.5, 0.8, 0.68, 0.2) - 0.6882902103133132) <= 1e-9);
  }

  SUBCASE("at or below the threshold the classification score passes through") {
    CHECK(quality_score(0.1, 0.8, 0.68, 0.2) == 0.1);
    CHECK(quality_score(0.2, 0.8, 0.68, 0.2) == 0.2);
  }

  SUBCASE("perfect localization lifts scores above the threshold") {
    for (double s_c : {0.25, 0.5, 0.75, 0.99}) {
      CHECK(quality_score(s_c, 1.0, 0.68, 0.2) >= s_c);
    }
  }

  SUBCASE("monotone in both arguments on a grid") {
    const double beta = 0.68, tau = 0.2;
    for (int i = 0; i < 1000; ++i) {
      const double sl = static_cast<double>(i) / 999.0;
      const double sl2 = std::min(1.0, sl + 1e-3);
      CHECK(quality_score(0.6, sl2, beta, tau) >= quality_score(0.6, sl, beta, tau));
    }
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double sc = static_cast<double>(i) / 1000.0;
      const double q = quality_score(sc, 0.7, beta, tau);
      CHECK(q >= prev - 1e-12);
      prev = q;
    }
  }
}

TEST_CASE("quality selection") {
  Xoshiro256 rng(24);

  SUBCASE("oversized budget passes everything through sorted by quality") {
    QuerySet cand = make_candidates(8, 4, rng);
    cand.quality_scores.resize(8);
    for (auto& q : cand.quality_scores) q = rng.uniform();
    const QuerySet sel = quality_select(cand, 1000);
    CHECK(sel.count == 8);
    for (int i = 1; i < sel.count; ++i) {
      CHECK(sel.fused_scores[i - 1] >= sel.fused_scores[i]);
    }
  }

  SUBCASE("all-equal scores keep the first indices in order") {
    QuerySet cand = make_candidates(6, 4, rng);
    cand.quality_scores.assign(6, 0.4);
    const QuerySet sel = quality_select(cand, 3);
    REQUIRE(sel.count == 3);
    CHECK(sel.flat_indices == std::vector<long long>{0, 1, 2});
  }

  SUBCASE("budget of one takes the argmax") {
    QuerySet cand = make_candidates(5, 4, rng);
    cand.quality_scores = {0.1, 0.9, 0.3, 0.2, 0.6};
    const QuerySet sel = quality_select(cand, 1);
    REQUIRE(sel.count == 1);
    CHECK(sel.flat_indices[0] == 1);
    CHECK(sel.fused_scores[0] == 0.9);
  }
}

TEST_CASE("quality query embedding") {
  Xoshiro256 rng(25);
  const Extent extent{64.0, 64.0, 8.0};
  std::vector<Box3D> boxes;
  std::vector<double> scores;
  for (int i = 0; i < 5; ++i) {
    boxes.push_back(Box3D::make(rng.uniform(-20, 20), rng.uniform(-20, 20),
                                rng.uniform(-2, 2), 3, 2, 1.5, rng.uniform(-3, 3)));
    scores.push_back(rng.uniform());
  }

  SUBCASE("zero weights produce identical bias-only rows") {
    const Mlp2 mlp = Mlp2::zeros(9, 8, 6);
    const auto out = embed_quality_queries(boxes, scores, extent, mlp);
    for (double v : out) CHECK(v == 0.0);
  }

  SUBCASE("row-wise map commutes with permutation") {
    const Mlp2 mlp = Mlp2::seeded(9, 8, 6, 31, "embed");
    const auto out = embed_quality_queries(boxes, scores, extent, mlp);
    std::vector<Box3D> rev(boxes.rbegin(), boxes.rend());
    std::vector<double> rev_scores(scores.rbegin(), scores.rend());
    const auto out_rev = embed_quality_queries(rev, rev_scores, extent, mlp);
    for (int i = 0; i < 5; ++i) {
      for (int ch = 0; ch < 6; ++ch) {
        CHECK(out[static_cast<std::size_t>(i) * 6 + ch] ==
              out_rev[static_cast<std::size_t>(4 - i) * 6 + ch]);
      }
    }
  }

  SUBCASE("the score input separates identical boxes") {
    const Mlp2 mlp = Mlp2::seeded(9, 8, 6, 32, "embed");
    const std::vector<Box3D> twin{boxes[0], boxes[0]};
    const auto out = embed_quality_queries(twin, {0.2, 0.9}, extent, mlp);
    bool differs = false;
    for (int ch = 0; ch < 6; ++ch) {
      if (out[ch] != out[6 + ch]) differs = true;
    }
    CHECK(differs);
  }

  SUBCASE("wrong MLP input width is rejected") {
    const Mlp2 mlp = Mlp2::zeros(8, 8, 6);
    CHECK_THROWS_AS(embed_quality_queries(boxes, scores, extent, mlp), validation_error);
  }
}

TEST_CASE("quality score is locally Lipschitz away from the threshold") {
  const double beta = 0.68, tau = 0.2, eps = 1e-7;
  Xoshiro256 rng(26);
  for (int t = 0; t < 500; ++t) {
    double s_c = rng.uniform(0.01, 0.99);
    if (std::abs(s_c - tau) < 10.0 * eps) continue;  // the one discontinuity
    const double s_l = rng.uniform(0.01, 0.99);
    const double base = quality_score(s_c, s_l, beta, tau);
    const double bumped = quality_score(s_c + eps, s_l, beta, tau);
    // d(s_c^(1-beta))/ds_c <= (1-beta) s_c^(-beta) <= 1 / s_c^beta; bounded on [0.01, 1].
    CHECK(std::abs(bumped - base) <= 50.0 * eps);
  }
}
