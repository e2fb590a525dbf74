#pragma once

// Feed-forward ReLU network with dropout, manual backpropagation and Adam.
// Samples are stored as columns: inputs are (input_dim x batch).

#include "adminbrier/core.hpp"
#include "adminbrier/random.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <vector>

namespace adminbrier {

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden{32, 32, 32, 32};
  double dropout = 0.1;
  std::size_t output_dim = 1;

  void validate() const {
    if (input_dim == 0 || output_dim == 0) throw DataError("mlp: input and output widths must be >= 1");
    for (std::size_t w : hidden)
      if (w == 0) throw DataError("mlp: hidden widths must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("mlp: dropout must be in [0, 1)");
  }
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

class Mlp {
 public:
  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t fan_in = spec_.input_dim;
    auto widths = spec_.hidden;
    widths.push_back(spec_.output_dim);
    for (std::size_t out : widths) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      DenseLayer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in)),
                       Eigen::VectorXd(static_cast<Eigen::Index>(out))};
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = uniform(rng, -bound, bound);
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = uniform(rng, -bound, bound);
      layers_.push_back(std::move(layer));
      fan_in = out;
    }
  }

  Mlp(MlpSpec spec, std::vector<DenseLayer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {
    spec_.validate();
    if (layers_.size() != spec_.hidden.size() + 1) throw DataError("mlp: layer count does not match spec");
    std::size_t fan_in = spec_.input_dim;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::size_t out = l < spec_.hidden.size() ? spec_.hidden[l] : spec_.output_dim;
      if (static_cast<std::size_t>(layers_[l].weight.rows()) != out ||
          static_cast<std::size_t>(layers_[l].weight.cols()) != fan_in ||
          static_cast<std::size_t>(layers_[l].bias.size()) != out)
        throw DataError("mlp: layer " + std::to_string(l) + " has the wrong shape");
      fan_in = out;
    }
  }

  const MlpSpec& spec() const noexcept { return spec_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  /// Inference pass (dropout off). Returns raw outputs (output_dim x batch).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    check_input(x);
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
      a = std::move(z);
    }
    return a;
  }

  struct Tape {
    std::vector<Eigen::MatrixXd> layer_inputs;  // input seen by each layer
    std::vector<Eigen::MatrixXd> pre_activations;
    std::vector<Eigen::MatrixXd> dropout_masks;  // scaled keep masks, hidden layers only
  };

  /// Training pass with inverted dropout after every hidden activation.
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& x, Rng& rng, Tape& tape) const {
    check_input(x);
    tape.layer_inputs.clear();
    tape.pre_activations.clear();
    tape.dropout_masks.clear();
    const double keep = 1.0 - spec_.dropout;
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      tape.layer_inputs.push_back(a);
      Eigen::MatrixXd z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 == layers_.size()) return z;
      tape.pre_activations.push_back(z);
      a = z.cwiseMax(0.0);
      Eigen::MatrixXd mask = Eigen::MatrixXd::Constant(a.rows(), a.cols(), 1.0);
      if (spec_.dropout > 0.0) {
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
          for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = bernoulli(rng, keep) ? 1.0 / keep : 0.0;
        a = a.cwiseProduct(mask);
      }
      tape.dropout_masks.push_back(std::move(mask));
    }
    return a;
  }

  /// Parameter gradients given dLoss/dOutput (output_dim x batch).
  std::vector<DenseLayer> backward(const Tape& tape, const Eigen::MatrixXd& grad_out) const {
    std::vector<DenseLayer> grads(layers_.size());
    Eigen::MatrixXd delta = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      grads[l].weight = delta * tape.layer_inputs[l].transpose();
      grads[l].bias = delta.rowwise().sum();
      if (l == 0) break;
      Eigen::MatrixXd upstream = layers_[l].weight.transpose() * delta;
      upstream = upstream.cwiseProduct(tape.dropout_masks[l - 1]);
      const auto& pre = tape.pre_activations[l - 1];
      delta = upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    }
    return grads;
  }

 private:
  void check_input(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.rows()) != spec_.input_dim)
      throw DataError("mlp: input has " + std::to_string(x.rows()) + " features, expected " +
                      std::to_string(spec_.input_dim));
  }

  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Mlp& net, const std::vector<DenseLayer>& grads) {
    auto& layers = net.layers();
    if (first_.empty()) {
      for (const auto& layer : layers) {
        first_.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                          Eigen::VectorXd::Zero(layer.bias.size())});
        second_.push_back(first_.back());
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, grads[l].weight, first_[l].weight, second_[l].weight, c1, c2);
      update(layers[l].bias, grads[l].bias, first_[l].bias, second_[l].bias, c1, c2);
    }
  }

 private:
  template <class P, class G, class M>
  void update(P& param, const G& grad, M& m, M& v, double c1, double c2) const {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }

  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<DenseLayer> first_, second_;
};

}  // namespace adminbrier
