#pragma once

// Brier-type scoring rules for survival predictions: MSE against the true
// survival, the uncensored Brier score, the IPCW Brier score (divide-by-n and
// weight-normalized forms, with weight capping), the administrative Brier
// score, and the closed-form expected Brier score.

#include "adminbrier/core.hpp"

#include <algorithm>
#include <concepts>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace adminbrier {

/// Score per grid time plus the effective sample size used to normalize it.
/// A score is missing (nullopt) where the effective sample size is zero.
struct ScoreCurve {
  TimeGrid grid;
  std::vector<std::optional<double>> score;
  std::vector<double> effective_n;
  /// Some censoring survival was evaluated past the data it was fitted on.
  bool censor_extrapolated = false;

  explicit ScoreCurve(TimeGrid g)
      : grid(std::move(g)), score(grid.size()), effective_n(grid.size(), 0.0) {}
};

/// Upper bound applied to every inverse censoring weight 1/G.
class WeightCap {
 public:
  static WeightCap unbounded() noexcept { return WeightCap(); }
  static WeightCap at(double max_weight) {
    if (!(max_weight >= 1.0)) throw DataError("weight cap must be >= 1");
    WeightCap c;
    c.max_ = max_weight;
    return c;
  }

  bool bounded() const noexcept { return max_ < kInfinity; }
  double max_weight() const noexcept { return max_; }
  std::string label() const { return bounded() ? format_cap(max_) : std::string("none"); }

 private:
  static std::string format_cap(double v) {
    if (v == static_cast<double>(static_cast<long long>(v))) return std::to_string(static_cast<long long>(v));
    return std::to_string(v);
  }
  double max_ = kInfinity;
};

/// Anything that evaluates a censoring survival function G and its left limit.
template <class C>
concept CensorCurve = requires(const C& c, double t) {
  { c.at(t) } -> std::convertible_to<double>;
  { c.left_limit(t) } -> std::convertible_to<double>;
};

/// Known random censoring C* ~ Uniform(lo, hi): G(t) = P(C* > t), continuous.
struct UniformCensorSurvival {
  double lo = 0.0;
  double hi = 100.0;
  double at(double t) const noexcept {
    if (t <= lo) return 1.0;
    if (t >= hi) return 0.0;
    return (hi - t) / (hi - lo);
  }
  double left_limit(double t) const noexcept { return at(t); }
};

namespace detail {

inline void require_same_shape(const SurvivalPrediction& a, const SurvivalPrediction& b) {
  if (a.subjects() != b.subjects() || !(a.grid() == b.grid()))
    throw DataError("shape mismatch: predictions differ in subjects or grid");
}

inline void require_subjects(const SurvivalPrediction& pred, std::size_t n) {
  if (pred.subjects() != n)
    throw DataError("shape mismatch: prediction has " + std::to_string(pred.subjects()) +
                    " rows, data has " + std::to_string(n));
}

template <class C>
double support_end_of(const C& c) {
  if constexpr (requires { c.support_end(); })
    return c.support_end();
  else
    return kInfinity;
}

}  // namespace detail

/// MSE(t) = mean_i (S_i(t) - pi_i(t))^2.
inline ScoreCurve mse_curve(const SurvivalPrediction& true_surv, const SurvivalPrediction& pred) {
  detail::require_same_shape(true_surv, pred);
  ScoreCurve out(pred.grid());
  const double n = static_cast<double>(pred.subjects());
  for (std::size_t j = 0; j < pred.grid().size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.subjects(); ++i) {
      const double d = true_surv(i, j) - pred(i, j);
      sum += d * d;
    }
    out.effective_n[j] = n;
    if (n > 0) out.score[j] = sum / n;
  }
  return out;
}

/// Brier score with fully observed event times; +inf marks an event beyond the horizon.
inline ScoreCurve brier_uncensored(std::span<const double> event_times, const SurvivalPrediction& pred) {
  detail::require_subjects(pred, event_times.size());
  ScoreCurve out(pred.grid());
  const double n = static_cast<double>(pred.subjects());
  for (std::size_t j = 0; j < pred.grid().size(); ++j) {
    const double t = pred.grid()[j];
    double sum = 0.0;
    for (std::size_t i = 0; i < event_times.size(); ++i) {
      const double y = event_times[i] > t ? 1.0 : 0.0;
      const double d = y - pred(i, j);
      sum += d * d;
    }
    out.effective_n[j] = n;
    if (n > 0) out.score[j] = sum / n;
  }
  return out;
}

/// IPCW Brier score. `censor_of(i)` returns the censoring survival curve of
/// subject i. Inverse weights are capped at `cap`; with `normalize` the sum is
/// divided by the sum of the capped weights, otherwise by n.
template <class CensorOf>
  requires std::invocable<const CensorOf&, std::size_t> &&
           CensorCurve<std::remove_cvref_t<std::invoke_result_t<const CensorOf&, std::size_t>>>
ScoreCurve brier_ipcw(const RightCensoredDataset& data, const SurvivalPrediction& pred,
                      const CensorOf& censor_of, WeightCap cap, bool normalize) {
  detail::require_subjects(pred, data.size());
  const std::size_t n = data.size();
  const std::size_t m = pred.grid().size();
  ScoreCurve out(pred.grid());

  auto inverse_weight = [&](double g) {
    if (g <= 0.0) {
      if (!cap.bounded()) throw NumericError("zero censoring survival");
      return cap.max_weight();
    }
    const double w = 1.0 / g;
    return cap.bounded() ? std::min(w, cap.max_weight()) : w;
  };

  // G_i(T_i-) for the event term does not depend on the evaluation time.
  std::vector<double> event_censor_surv(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    if (data[i].event) event_censor_surv[i] = censor_of(i).left_limit(data[i].duration);

  for (std::size_t j = 0; j < m; ++j) {
    const double t = pred.grid()[j];
    double sum = 0.0;
    double weights = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = data[i];
      const double p = pred(i, j);
      if (r.duration <= t) {
        if (!r.event) continue;
        const auto& g = censor_of(i);
        if (r.duration > detail::support_end_of(g)) out.censor_extrapolated = true;
        const double w = inverse_weight(event_censor_surv[i]);
        sum += p * p * w;
        weights += w;
      } else {
        const auto& g = censor_of(i);
        if (t > detail::support_end_of(g)) out.censor_extrapolated = true;
        const double w = inverse_weight(g.at(t));
        sum += (1.0 - p) * (1.0 - p) * w;
        weights += w;
      }
    }
    out.effective_n[j] = weights;
    if (normalize) {
      if (weights > 0.0) out.score[j] = sum / weights;
    } else if (n > 0) {
      out.score[j] = sum / static_cast<double>(n);
    }
  }
  return out;
}

/// IPCW Brier score with one censoring curve shared by all subjects (e.g. Kaplan-Meier).
template <CensorCurve C>
ScoreCurve brier_ipcw(const RightCensoredDataset& data, const SurvivalPrediction& pred, const C& shared,
                      WeightCap cap, bool normalize) {
  return brier_ipcw(data, pred, [&](std::size_t) -> const C& { return shared; }, cap, normalize);
}

/// IPCW Brier score with one censoring curve per subject.
template <CensorCurve C>
ScoreCurve brier_ipcw(const RightCensoredDataset& data, const SurvivalPrediction& pred,
                      std::span<const C> per_subject, WeightCap cap, bool normalize) {
  if (per_subject.size() != data.size())
    throw DataError("brier_ipcw: need one censoring curve per subject");
  return brier_ipcw(data, pred, [&](std::size_t i) -> const C& { return per_subject[i]; }, cap, normalize);
}

template <CensorCurve C>
ScoreCurve brier_ipcw(const RightCensoredDataset& data, const SurvivalPrediction& pred,
                      const std::vector<C>& per_subject, WeightCap cap, bool normalize) {
  return brier_ipcw(data, pred, std::span<const C>(per_subject), cap, normalize);
}

/// Administrative Brier score: at each t the unweighted Brier score over the
/// subjects with C* >= t, for whom 1{T* > t} is known.
inline ScoreCurve brier_admin(const RightCensoredDataset& data, const SurvivalPrediction& pred) {
  if (!data.admin_complete()) throw DataError("brier_admin: dataset lacks administrative censoring times");
  detail::require_subjects(pred, data.size());
  ScoreCurve out(pred.grid());
  for (std::size_t j = 0; j < pred.grid().size(); ++j) {
    const double t = pred.grid()[j];
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& r = data[i];
      if (*r.admin_censor_time < t) continue;
      // Censored subjects have T* > C* >= t.
      const double y = (!r.event || r.duration > t) ? 1.0 : 0.0;
      const double d = y - pred(i, j);
      sum += d * d;
      ++count;
    }
    out.effective_n[j] = static_cast<double>(count);
    if (count > 0) out.score[j] = sum / static_cast<double>(count);
  }
  return out;
}

/// E[BS(t)] = MSE(t) + mean_i S_i(t)(1 - S_i(t)).
inline ScoreCurve expected_brier_oracle(const SurvivalPrediction& true_surv, const SurvivalPrediction& pred) {
  ScoreCurve out = mse_curve(true_surv, pred);
  const double n = static_cast<double>(pred.subjects());
  for (std::size_t j = 0; j < pred.grid().size(); ++j) {
    double irreducible = 0.0;
    for (std::size_t i = 0; i < pred.subjects(); ++i) irreducible += true_surv(i, j) * (1.0 - true_surv(i, j));
    if (out.score[j]) *out.score[j] += irreducible / n;
  }
  return out;
}

/// Mean of the non-missing scores at grid times within [lo, hi].
inline std::optional<double> time_average(const ScoreCurve& curve, double lo, double hi) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    const double t = curve.grid[j];
    if (t < lo || t > hi || !curve.score[j]) continue;
    sum += *curve.score[j];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace adminbrier
