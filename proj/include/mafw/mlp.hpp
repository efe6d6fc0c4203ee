#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mafw/rng.hpp"

/// Dense feed-forward networks with ReLU hidden layers and hand-written
/// backpropagation. Parameters live in one flat buffer laid out layer by
/// layer as [W (out x in, row-major), b (out)], which is what soft updates,
/// federation and checkpoints operate on.
namespace mafw::nn {

enum class OutputActivation { kIdentity, kTanh };

class Mlp {
 public:
  Mlp() = default;
  /// Throws std::invalid_argument for fewer than two layers or a zero width.
  Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void initialize(Rng& rng);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  OutputActivation output_activation() const { return output_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  bool same_shape(const Mlp& other) const {
    return sizes_ == other.sizes_ && output_ == other.output_;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  OutputActivation output_ = OutputActivation::kIdentity;
};

/// Post-activation values of every layer, kept for the backward pass.
struct Tape {
  std::vector<std::vector<double>> activations;  // [0] is the input

  std::span<const double> output() const { return activations.back(); }
};

/// Flat gradient congruent with Mlp::params(), plus the input gradient.
struct GradientSet {
  std::vector<double> params;
  std::vector<double> input;

  explicit GradientSet(std::size_t param_count = 0, std::size_t input_size = 0)
      : params(param_count, 0.0), input(input_size, 0.0) {}

  GradientSet& operator+=(const GradientSet& other);
  void scale(double factor);
  double norm() const;
};

/// Throws std::invalid_argument on a dimension mismatch.
std::vector<double> forward(const Mlp& net, std::span<const double> input);
Tape forward_tape(const Mlp& net, std::span<const double> input);

/// Gradient of dot(output, upstream) w.r.t. every parameter and the input.
GradientSet backward(const Mlp& net, const Tape& tape, std::span<const double> upstream);

/// Same as backward() but accumulates into an existing gradient.
void backward_into(const Mlp& net, const Tape& tape, std::span<const double> upstream,
                   GradientSet& grads);

/// Rescales the gradient so its global L2 norm is at most max_norm.
void clip_global_norm(GradientSet& grads, double max_norm);

/// Plain gradient descent; there is no per-parameter state.
struct Sgd {
  double learning_rate = 0.01;

  /// theta -= lr * g. Throws std::invalid_argument on shape mismatch and
  /// std::domain_error on a non-finite gradient entry.
  void step(Mlp& net, const GradientSet& grads) const;
};

/// target <- phi * online + (1 - phi) * target. Throws std::invalid_argument
/// for phi outside [0, 1] or mismatched shapes.
void soft_update(Mlp& target, const Mlp& online, double phi);

/// Text checkpoint: a header line "mafw-mlp 1", the activation name, the layer
/// sizes, then one hexfloat per parameter. Round-trips bit-exactly.
void save(const Mlp& net, std::ostream& os);
Mlp load(std::istream& is);
void save_file(const Mlp& net, const std::string& path);
Mlp load_file(const std::string& path);

}  // namespace mafw::nn
