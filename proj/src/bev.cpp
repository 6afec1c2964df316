#include "seed/bev.hpp"

#include <cmath>
#include <cstring>

#include "seed/error.hpp"

namespace seed {

BevFeatureMap BevFeatureMap::zeros(int h, int w, int c) {
  BevFeatureMap m;
  m.height = h;
  m.width = w;
  m.channels = c;
  m.data.assign(static_cast<std::size_t>(h) * w * c, 0.0);
  m.validate();
  return m;
}

void BevFeatureMap::validate() const {
  if (height < 1 || width < 1 || channels < 1) {
    throw validation_error("BevFeatureMap: dims must be >= 1");
  }
  if (!(cell_size_x > 0.0) || !(cell_size_y > 0.0)) {
    throw validation_error("BevFeatureMap: cell sizes must be positive");
  }
  const std::size_t expect = static_cast<std::size_t>(height) * width * channels;
  if (data.size() != expect) {
    throw validation_error("BevFeatureMap: data length " + std::to_string(data.size()) +
                           " != H*W*C " + std::to_string(expect));
  }
}

FeatureCoord world_to_feature(const BevFeatureMap& map, double x, double y) {
  return {(y - map.origin_y) / map.cell_size_y, (x - map.origin_x) / map.cell_size_x};
}

std::pair<double, double> feature_to_world(const BevFeatureMap& map, const FeatureCoord& rc) {
  return {map.origin_x + rc.col * map.cell_size_x, map.origin_y + rc.row * map.cell_size_y};
}

namespace {

struct BilinearCell {
  int r0, c0;
  double fr, fc;
};

BilinearCell locate(const FeatureCoord& rc) {
  const double rf = std::floor(rc.row);
  const double cf = std::floor(rc.col);
  return {static_cast<int>(rf), static_cast<int>(cf), rc.row - rf, rc.col - cf};
}

bool in_grid(const BevFeatureMap& map, int r, int c) {
  return r >= 0 && r < map.height && c >= 0 && c < map.width;
}

}  // namespace

void bilinear_sample_into(const BevFeatureMap& map, const FeatureCoord& rc,
                          std::span<double> out) {
  if (!std::isfinite(rc.row) || !std::isfinite(rc.col)) {
    throw validation_error("bilinear_sample: non-finite sampling coordinate");
  }
  const auto [r0, c0, fr, fc] = locate(rc);
  const int r1 = r0 + 1, c1 = c0 + 1;
  const double w00 = (1.0 - fr) * (1.0 - fc);
  const double w01 = (1.0 - fr) * fc;
  const double w10 = fr * (1.0 - fc);
  const double w11 = fr * fc;

  std::memset(out.data(), 0, out.size() * sizeof(double));
  const int c = map.channels;
  auto add = [&](int r, int col, double w) {
    if (w == 0.0 || !in_grid(map, r, col)) return;
    const double* f = map.data.data() + map.flat_index(r, col) * c;
    for (int ch = 0; ch < c; ++ch) out[ch] += w * f[ch];
  };
  add(r0, c0, w00);
  add(r0, c1, w01);
  add(r1, c0, w10);
  add(r1, c1, w11);
}

std::vector<double> bilinear_sample(const BevFeatureMap& map, const FeatureCoord& rc) {
  std::vector<double> out(map.channels);
  bilinear_sample_into(map, rc, out);
  return out;
}

SampleJacobian bilinear_sample_jacobian(const BevFeatureMap& map, const FeatureCoord& rc) {
  if (!std::isfinite(rc.row) || !std::isfinite(rc.col)) {
    throw validation_error("bilinear_sample_jacobian: non-finite sampling coordinate");
  }
  const auto [r0, c0, fr, fc] = locate(rc);
  const int r1 = r0 + 1, c1 = c0 + 1;
  const int c = map.channels;

  SampleJacobian jac;
  jac.d.assign(static_cast<std::size_t>(c) * 2, 0.0);
  jac.on_lattice = (fr == 0.0) || (fc == 0.0);

  auto fetch = [&](int r, int col, int ch) -> double {
    return in_grid(map, r, col) ? map.data[map.flat_index(r, col) * c + ch] : 0.0;
  };
  for (int ch = 0; ch < c; ++ch) {
    const double f00 = fetch(r0, c0, ch);
    const double f01 = fetch(r0, c1, ch);
    const double f10 = fetch(r1, c0, ch);
    const double f11 = fetch(r1, c1, ch);
    jac.d[static_cast<std::size_t>(ch) * 2 + 0] =
        (1.0 - fc) * (f10 - f00) + fc * (f11 - f01);
    jac.d[static_cast<std::size_t>(ch) * 2 + 1] =
        (1.0 - fr) * (f01 - f00) + fr * (f11 - f10);
  }
  return jac;
}

namespace {

// Alternating sin/cos over geometrically spaced frequencies, base 10000.
void sincos_encode_1d(double pos, int half, double* out) {
  for (int t = 0; t < half; ++t) {
    const double exponent = static_cast<double>(2 * (t / 2)) / static_cast<double>(half);
    const double inv_freq = std::pow(10000.0, -exponent);
    const double angle = pos * inv_freq;
    out[t] = (t % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
}

}  // namespace

void sincos_encode_2d(double x, double y, int c, std::span<double> out) {
  if (c < 4 || c % 2 != 0) {
    throw validation_error("sincos_encode_2d: channel count must be even and >= 4");
  }
  const int half = c / 2;
  sincos_encode_1d(x, half, out.data());
  sincos_encode_1d(y, half, out.data() + half);
}

BevFeatureMap position_embedding(int h, int w, int c) {
  if (h < 1 || w < 1) throw validation_error("position_embedding: dims must be >= 1");
  if (c < 4 || c % 2 != 0) {
    throw validation_error("position_embedding: channel count must be even and >= 4");
  }
  BevFeatureMap emb = BevFeatureMap::zeros(h, w, c);
  const int half = c / 2;
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      double* cell = emb.data.data() + emb.flat_index(r, col) * c;
      sincos_encode_1d(static_cast<double>(col), half, cell);
      sincos_encode_1d(static_cast<double>(r), half, cell + half);
    }
  }
  return emb;
}

BevFeatureMap add_position_embedding(const BevFeatureMap& map) {
  map.validate();
  const BevFeatureMap emb = position_embedding(map.height, map.width, map.channels);
  BevFeatureMap out = map;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += emb.data[i];
  return out;
}

}  // namespace seed
