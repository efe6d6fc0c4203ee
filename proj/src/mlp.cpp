#include "mafw/mlp.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mafw::nn {

Mlp::Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output)
    : sizes_(std::move(layer_sizes)), output_(output) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least two layers");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw std::invalid_argument("Mlp: zero-width layer");
    offsets_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

void Mlp::initialize(Rng& rng) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t begin = weight_offset(l);
    const std::size_t end = bias_offset(l) + sizes_[l + 1];
    for (std::size_t i = begin; i < end; ++i) params_[i] = rng.uniform(-bound, bound);
  }
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.params.size() != params.size() || other.input.size() != input.size()) {
    throw std::invalid_argument("GradientSet: shape mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += other.params[i];
  for (std::size_t i = 0; i < input.size(); ++i) input[i] += other.input[i];
  return *this;
}

void GradientSet::scale(double factor) {
  for (double& g : params) g *= factor;
  for (double& g : input) g *= factor;
}

double GradientSet::norm() const {
  double sq = 0.0;
  for (double g : params) sq += g * g;
  return std::sqrt(sq);
}

namespace {

double activate(double z, bool last, OutputActivation out) {
  if (!last) return z > 0.0 ? z : 0.0;
  return out == OutputActivation::kTanh ? std::tanh(z) : z;
}

double activation_slope(double a, bool last, OutputActivation out) {
  if (!last) return a > 0.0 ? 1.0 : 0.0;
  return out == OutputActivation::kTanh ? 1.0 - a * a : 1.0;
}

}  // namespace

Tape forward_tape(const Mlp& net, std::span<const double> input) {
  if (input.size() != net.input_size()) {
    throw std::invalid_argument("forward: input has " + std::to_string(input.size()) +
                                " entries, network expects " + std::to_string(net.input_size()));
  }
  const auto& sizes = net.layer_sizes();
  const auto params = net.params();
  Tape tape;
  tape.activations.reserve(sizes.size());
  tape.activations.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const double* w = params.data() + net.weight_offset(l);
    const double* b = params.data() + net.bias_offset(l);
    const bool last = l + 1 == net.layer_count();
    const std::vector<double>& x = tape.activations.back();
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
      y[o] = activate(z, last, net.output_activation());
    }
    tape.activations.push_back(std::move(y));
  }
  return tape;
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
  Tape tape = forward_tape(net, input);
  return std::move(tape.activations.back());
}

void backward_into(const Mlp& net, const Tape& tape, std::span<const double> upstream,
                   GradientSet& grads) {
  if (upstream.size() != net.output_size()) {
    throw std::invalid_argument("backward: upstream gradient has wrong length");
  }
  if (tape.activations.size() != net.layer_sizes().size()) {
    throw std::invalid_argument("backward: tape does not match network");
  }
  if (grads.params.size() != net.param_count() || grads.input.size() != net.input_size()) {
    throw std::invalid_argument("backward: gradient buffer does not match network");
  }
  const auto& sizes = net.layer_sizes();
  const auto params = net.params();
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const bool last = l + 1 == net.layer_count();
    const auto& y = tape.activations[l + 1];
    const auto& x = tape.activations[l];
    for (std::size_t o = 0; o < out; ++o) delta[o] *= activation_slope(y[o], last, net.output_activation());

    double* gw = grads.params.data() + net.weight_offset(l);
    double* gb = grads.params.data() + net.bias_offset(l);
    const double* w = params.data() + net.weight_offset(l);
    std::vector<double> below(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* grow = gw + o * in;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        grow[i] += d * x[i];
        below[i] += d * row[i];
      }
    }
    delta = std::move(below);
  }
  for (std::size_t i = 0; i < delta.size(); ++i) grads.input[i] += delta[i];
}

GradientSet backward(const Mlp& net, const Tape& tape, std::span<const double> upstream) {
  GradientSet grads(net.param_count(), net.input_size());
  backward_into(net, tape, upstream, grads);
  return grads;
}

void clip_global_norm(GradientSet& grads, double max_norm) {
  const double n = grads.norm();
  if (n > max_norm && n > 0.0) {
    const double f = max_norm / n;
    for (double& g : grads.params) g *= f;
  }
}

void Sgd::step(Mlp& net, const GradientSet& grads) const {
  if (grads.params.size() != net.param_count()) {
    throw std::invalid_argument("sgd: gradient does not match network");
  }
  for (double g : grads.params) {
    if (!std::isfinite(g)) throw std::domain_error("sgd: non-finite gradient");
  }
  auto p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * grads.params[i];
}

void soft_update(Mlp& target, const Mlp& online, double phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw std::invalid_argument("soft_update: phi outside [0, 1]");
  if (!target.same_shape(online)) throw std::invalid_argument("soft_update: shape mismatch");
  auto t = target.params();
  const auto o = online.params();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = phi * o[i] + (1.0 - phi) * t[i];
}

void save(const Mlp& net, std::ostream& os) {
  os << "mafw-mlp 1\n";
  os << (net.output_activation() == OutputActivation::kTanh ? "tanh" : "identity") << '\n';
  os << net.layer_sizes().size();
  for (std::size_t s : net.layer_sizes()) os << ' ' << s;
  os << '\n' << std::hexfloat;
  for (double p : net.params()) os << p << '\n';
  os << std::defaultfloat;
}

Mlp load(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "mafw-mlp" || version != 1) throw std::runtime_error("load: not a mafw-mlp v1 file");
  std::string act;
  is >> act;
  OutputActivation out;
  if (act == "tanh") {
    out = OutputActivation::kTanh;
  } else if (act == "identity") {
    out = OutputActivation::kIdentity;
  } else {
    throw std::runtime_error("load: unknown activation '" + act + "'");
  }
  std::size_t count = 0;
  is >> count;
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) is >> s;
  if (!is) throw std::runtime_error("load: truncated header");
  Mlp net(sizes, out);
  std::string token;
  for (double& p : net.params()) {
    if (!(is >> token)) throw std::runtime_error("load: truncated parameters");
    p = std::strtod(token.c_str(), nullptr);
  }
  return net;
}

void save_file(const Mlp& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  save(net, os);
}

Mlp load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load(is);
}

}  // namespace mafw::nn
