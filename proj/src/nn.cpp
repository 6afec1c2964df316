#include "seed/nn.hpp"

#include <cmath>

#include "seed/error.hpp"
#include "seed/rng.hpp"

namespace seed {

Linear Linear::zeros(int in, int out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight.assign(static_cast<std::size_t>(in) * out, 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

Linear Linear::identity(int dim) {
  Linear l = zeros(dim, dim);
  for (int i = 0; i < dim; ++i) l.weight[static_cast<std::size_t>(i) * dim + i] = 1.0;
  return l;
}

Linear Linear::seeded(int in, int out, std::uint64_t seed, const std::string& name) {
  Linear l = zeros(in, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Xoshiro256 wrng = named_stream(seed, name + ".weight");
  for (auto& v : l.weight) v = wrng.uniform(-bound, bound);
  Xoshiro256 brng = named_stream(seed, name + ".bias");
  for (auto& v : l.bias) v = brng.uniform(-bound, bound);
  return l;
}

void Linear::validate() const {
  if (in < 1 || out < 1 || weight.size() != static_cast<std::size_t>(in) * out ||
      bias.size() != static_cast<std::size_t>(out)) {
    throw validation_error("Linear: inconsistent shapes");
  }
}

void Linear::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(in) || y.size() != static_cast<std::size_t>(out)) {
    throw validation_error("Linear: input width " + std::to_string(x.size()) +
                           ", expected " + std::to_string(in));
  }
  for (int o = 0; o < out; ++o) {
    const double* row = weight.data() + static_cast<std::size_t>(o) * in;
    double acc = bias[o];
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

std::vector<double> Linear::apply(std::span<const double> x) const {
  std::vector<double> y(out);
  apply(x, y);
  return y;
}

Mlp2 Mlp2::zeros(int in, int hidden, int out) {
  return {Linear::zeros(in, hidden), Linear::zeros(hidden, out)};
}

Mlp2 Mlp2::seeded(int in, int hidden, int out, std::uint64_t seed, const std::string& name) {
  return {Linear::seeded(in, hidden, seed, name + ".l1"),
          Linear::seeded(hidden, out, seed, name + ".l2")};
}

void Mlp2::validate() const {
  l1.validate();
  l2.validate();
  if (l1.out != l2.in) throw validation_error("Mlp2: hidden widths disagree");
}

void Mlp2::apply(std::span<const double> x, std::span<double> y) const {
  std::vector<double> hidden(l1.out);
  l1.apply(x, hidden);
  relu_inplace(hidden);
  l2.apply(hidden, y);
}

std::vector<double> Mlp2::apply(std::span<const double> x) const {
  std::vector<double> y(l2.out);
  apply(x, y);
  return y;
}

LayerNorm LayerNorm::unit(int dim) {
  LayerNorm n;
  n.dim = dim;
  n.gain.assign(dim, 1.0);
  n.bias.assign(dim, 0.0);
  return n;
}

LayerNorm LayerNorm::seeded(int dim, std::uint64_t seed, const std::string& name) {
  LayerNorm n = unit(dim);
  Xoshiro256 rng = named_stream(seed, name + ".gain");
  for (auto& v : n.gain) v = rng.uniform(0.5, 1.5);
  Xoshiro256 brng = named_stream(seed, name + ".bias");
  for (auto& v : n.bias) v = brng.uniform(-0.1, 0.1);
  return n;
}

void LayerNorm::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != static_cast<std::size_t>(dim) || y.size() != x.size()) {
    throw validation_error("LayerNorm: width mismatch");
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= dim;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= dim;
  const double inv = 1.0 / std::sqrt(var + eps);
  for (int i = 0; i < dim; ++i) y[i] = gain[i] * ((x[i] - mean) * inv) + bias[i];
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax(std::span<const double> logits, std::span<double> probs) {
  if (logits.empty() || probs.size() != logits.size()) {
    throw validation_error("softmax: empty or mismatched spans");
  }
  double max = logits[0];
  for (double v : logits) max = std::max(max, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max);
    sum += probs[i];
  }
  const double inv = 1.0 / sum;
  for (auto& p : probs) p *= inv;
}

void relu_inplace(std::span<double> x) {
  for (auto& v : x) v = v > 0.0 ? v : 0.0;
}

}  // namespace seed
