#include <doctest.h>

#include <cmath>

#include "seed/error.hpp"
#include "seed/nn.hpp"
#include "seed/rng.hpp"

using namespace seed;

TEST_CASE("linear layer applies W x + b") {
  Linear l = Linear::zeros(2, 2);
  l.weight = {1.0, 2.0, 3.0, 4.0};
  l.bias = {0.5, -0.5};
  const auto y = l.apply(std::vector<double>{1.0, 1.0});
  CHECK(y[0] == doctest::Approx(3.5));
  CHECK(y[1] == doctest::Approx(6.5));
  CHECK_THROWS_AS(l.apply(std::vector<double>{1.0}), validation_error);
}

TEST_CASE("seeded initialization is deterministic and bounded") {
  const Linear a = Linear::seeded(16, 8, 42, "probe");
  const Linear b = Linear::seeded(16, 8, 42, "probe");
  const Linear c = Linear::seeded(16, 8, 42, "other");
  CHECK(a.weight == b.weight);
  CHECK(a.bias == b.bias);
  CHECK(a.weight != c.weight);
  const double bound = 1.0 / std::sqrt(16.0);
  for (double v : a.weight) {
    CHECK(v >= -bound);
    CHECK(v < bound);
  }
}

TEST_CASE("mlp relu gate") {
  Mlp2 m = Mlp2::zeros(2, 3, 1);
  // l1 row 0 passes x0, row 1 passes -x0.
  m.l1.weight[0] = 1.0;
  m.l1.weight[2] = -1.0;
  m.l2.weight = {1.0, 1.0, 0.0};
  CHECK(m.apply(std::vector<double>{2.0, 0.0})[0] == doctest::Approx(2.0));
  CHECK(m.apply(std::vector<double>{-3.0, 0.0})[0] == doctest::Approx(3.0));
}

TEST_CASE("layer norm standardizes with unit gain") {
  const LayerNorm n = LayerNorm::unit(4);
  std::vector<double> x{1.0, 2.0, 3.0, 4.0}, y(4);
  n.apply(x, y);
  double mean = 0.0;
  for (double v : y) mean += v;
  CHECK(std::abs(mean) <= 1e-12);
  double var = 0.0;
  for (double v : y) var += v * v;
  CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-4));

  // Epsilon keeps a constant row finite.
  std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
  n.apply(flat, y);
  for (double v : y) CHECK(std::isfinite(v));
}

TEST_CASE("softmax properties") {
  std::vector<double> probs(3);
  softmax(std::vector<double>{0.0, 0.0, 0.0}, probs);
  for (double p : probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  std::vector<double> logits{0.3, -1.2, 2.0};
  std::vector<double> shifted{0.3 + 7.5, -1.2 + 7.5, 2.0 + 7.5};
  std::vector<double> a(3), b(3);
  softmax(logits, a);
  softmax(shifted, b);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);

  softmax(std::vector<double>{40.0, 0.0, 0.0}, probs);
  CHECK(probs[0] >= 1.0 - 1e-12);
}
