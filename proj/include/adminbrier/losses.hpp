#pragma once

// Training losses for the two discrete-time predictors: the summed binary
// cross-entropy of the binary-classifier (BCE) method and the negative
// log-likelihood of the Logistic-Hazard model. Both come with analytic
// gradients, with respect to the probabilities or to the pre-sigmoid logits.

#include "adminbrier/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace adminbrier {

inline constexpr double kProbabilityClamp = 1e-7;

inline double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

/// Durations mapped to grid indices. index == grid_size marks a duration
/// beyond the last grid time (survived every interval on the grid).
struct DiscreteLabels {
  std::vector<std::size_t> index;
  std::vector<bool> event;
  std::size_t grid_size = 0;
  std::size_t beyond_grid = 0;

  std::size_t size() const noexcept { return index.size(); }
};

inline DiscreteLabels discretize_labels(std::span<const double> durations, std::span<const int> events,
                                        const TimeGrid& grid) {
  if (durations.size() != events.size()) throw DataError("labels: durations and events differ in length");
  DiscreteLabels out;
  out.grid_size = grid.size();
  out.index.resize(durations.size());
  out.event.resize(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const GridIndex g = discretize_duration(durations[i], grid);
    out.index[i] = g.clamped ? grid.size() : g.index;
    out.event[i] = events[i] != 0 && !g.clamped;
    if (g.clamped) ++out.beyond_grid;
  }
  return out;
}

inline DiscreteLabels discretize_labels(const RightCensoredDataset& data, const TimeGrid& grid) {
  const auto t = data.durations();
  const auto d = data.events();
  return discretize_labels(t, d, grid);
}

struct LossResult {
  double loss = 0.0;
  Matrix gradient;  // same shape as the input
};

namespace detail {

inline void check_loss_shape(const Matrix& m, const DiscreteLabels& labels) {
  if (static_cast<std::size_t>(m.rows()) != labels.size() || static_cast<std::size_t>(m.cols()) != labels.grid_size)
    throw DataError("loss: input shape does not match labels");
}

inline double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

inline void check_finite_loss(double loss, const char* what) {
  if (!std::isfinite(loss)) throw NumericError(std::string(what) + ": non-finite loss");
}

// BCE label at (i, j): 1 = survived past t_j, 0 = event by t_j, -1 = censored before t_j (excluded).
inline int bce_target(const DiscreteLabels& labels, std::size_t i, std::size_t j) noexcept {
  if (labels.index[i] > j) return 1;
  return labels.event[i] ? 0 : -1;
}

// Logistic-Hazard label at (i, j): 1 = event in interval j, 0 = survived it, -1 = not at risk.
inline int hazard_target(const DiscreteLabels& labels, std::size_t i, std::size_t j) noexcept {
  if (j > labels.index[i]) return -1;
  if (j == labels.index[i]) return labels.event[i] ? 1 : 0;
  return 0;
}

}  // namespace detail

/// Summed BCE over all (subject, time) cells, excluding cells where the subject
/// was censored at or before the time. Gradient is with respect to pi; it is
/// zero where pi was clamped.
inline LossResult bce_multi_loss(const Matrix& pi, const DiscreteLabels& labels) {
  detail::check_loss_shape(pi, labels);
  LossResult out{0.0, Matrix::Zero(pi.rows(), pi.cols())};
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.grid_size; ++j) {
      const int y = detail::bce_target(labels, i, j);
      if (y < 0) continue;
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      const double p = pi(r, c);
      const double pc = detail::clamp_probability(p);
      const bool clamped = pc != p;
      if (y == 1) {
        out.loss -= std::log(pc);
        if (!clamped) out.gradient(r, c) = -1.0 / pc;
      } else {
        out.loss -= std::log1p(-pc);
        if (!clamped) out.gradient(r, c) = 1.0 / (1.0 - pc);
      }
    }
  detail::check_finite_loss(out.loss, "bce loss");
  return out;
}

/// Same loss with pi = sigmoid(logits); gradient with respect to the logits.
inline LossResult bce_multi_loss_logits(const Matrix& logits, const DiscreteLabels& labels) {
  detail::check_loss_shape(logits, labels);
  LossResult out{0.0, Matrix::Zero(logits.rows(), logits.cols())};
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.grid_size; ++j) {
      const int y = detail::bce_target(labels, i, j);
      if (y < 0) continue;
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      const double p = sigmoid(logits(r, c));
      const double pc = detail::clamp_probability(p);
      out.loss -= y == 1 ? std::log(pc) : std::log1p(-pc);
      out.gradient(r, c) = p - static_cast<double>(y);
    }
  detail::check_finite_loss(out.loss, "bce loss");
  return out;
}

/// Discrete-time survival negative log-likelihood: a Bernoulli term for every
/// interval the subject is at risk in, up to and including its own interval.
/// Takes hazards h = sigmoid(logits); the gradient is with respect to the logits.
inline LossResult logistic_hazard_nll(const Matrix& hazards, const DiscreteLabels& labels) {
  detail::check_loss_shape(hazards, labels);
  LossResult out{0.0, Matrix::Zero(hazards.rows(), hazards.cols())};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t last = std::min(labels.index[i], labels.grid_size - 1);
    for (std::size_t j = 0; j <= last; ++j) {
      const int y = detail::hazard_target(labels, i, j);
      if (y < 0) continue;
      const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
      const double h = hazards(r, c);
      const double hc = detail::clamp_probability(h);
      out.loss -= y == 1 ? std::log(hc) : std::log1p(-hc);
      out.gradient(r, c) = h - static_cast<double>(y);
    }
  }
  detail::check_finite_loss(out.loss, "logistic-hazard loss");
  return out;
}

inline LossResult logistic_hazard_nll_logits(const Matrix& logits, const DiscreteLabels& labels) {
  Matrix h = logits.unaryExpr([](double z) { return sigmoid(z); });
  return logistic_hazard_nll(h, labels);
}

}  // namespace adminbrier
