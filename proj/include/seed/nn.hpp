#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seed {

// Dense layer y = W x + b with W stored row-major (out x in).
struct Linear {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // out * in
  std::vector<double> bias;    // out

  static Linear zeros(int in, int out);
  static Linear identity(int dim);
  // Weights and biases uniform in [-1/sqrt(in), 1/sqrt(in)] from the named
  // RNG stream "<name>.weight" / "<name>.bias".
  static Linear seeded(int in, int out, std::uint64_t seed, const std::string& name);

  void validate() const;
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;
};

// Two dense layers with ReLU in between.
struct Mlp2 {
  Linear l1;
  Linear l2;

  static Mlp2 zeros(int in, int hidden, int out);
  static Mlp2 seeded(int in, int hidden, int out, std::uint64_t seed, const std::string& name);

  void validate() const;
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;
};

// Per-vector normalization with learnable gain/bias, epsilon 1e-5.
struct LayerNorm {
  int dim = 0;
  std::vector<double> gain;
  std::vector<double> bias;
  double eps = 1e-5;

  static LayerNorm unit(int dim);
  static LayerNorm seeded(int dim, std::uint64_t seed, const std::string& name);

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_inplace(std::span<double> x) const { apply(x, x); }
};

double sigmoid(double x);
// Max-shifted softmax; writes a distribution summing to 1.
void softmax(std::span<const double> logits, std::span<double> probs);
void relu_inplace(std::span<double> x);

}  // namespace seed
