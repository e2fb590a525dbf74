#pragma once

// Simulation designs: a constant-hazard study with uniform censoring, and
// logit-hazard mixtures with administrative censoring defined by thresholding
// a survival-like function Q(t | x).

#include "adminbrier/censoring.hpp"
#include "adminbrier/coefficient_tables_v1.hpp"
#include "adminbrier/core.hpp"
#include "adminbrier/metrics.hpp"
#include "adminbrier/models.hpp"
#include "adminbrier/random.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adminbrier {

/// gamma(x) = intercept + sum_k weight_k * x[index_k].
struct AffineGamma {
  double intercept = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;

  double operator()(std::span<const double> x) const {
    double v = intercept;
    for (const auto& [idx, w] : terms) v += w * x[idx];
    return v;
  }
};

/// Logit hazard g(t | x) = a1 g_sin + a2 g_con + a3 g_acc with
///   g_sin = gamma_1 sin(gamma_2 (t + gamma_3)) + gamma_4,
///   g_con = gamma_5,  g_acc = gamma_6 t - 10,
///   (a1, a2, a3) = softmax(gamma_7, gamma_8, gamma_9).
/// The constant form uses g = gamma_5 only.
struct LogitHazardSpec {
  enum class Form { mixture, constant };
  Form form = Form::mixture;
  std::array<AffineGamma, 9> gamma;
  std::size_t covariate_dim = 0;
};

inline std::array<double, 3> mixture_weights(const LogitHazardSpec& spec, std::span<const double> x) {
  const std::array<double, 3> z{spec.gamma[6](x), spec.gamma[7](x), spec.gamma[8](x)};
  const double top = std::max({z[0], z[1], z[2]});
  std::array<double, 3> a{std::exp(z[0] - top), std::exp(z[1] - top), std::exp(z[2] - top)};
  const double total = a[0] + a[1] + a[2];
  for (double& v : a) v /= total;
  return a;
}

/// Discrete hazards h(t_j | x) = sigmoid(g(t_j | x)) on the grid.
inline std::vector<double> eval_logit_hazard(const LogitHazardSpec& spec, std::span<const double> x,
                                             const TimeGrid& grid) {
  if (x.size() != spec.covariate_dim)
    throw DataError("eval_logit_hazard: expected " + std::to_string(spec.covariate_dim) + " covariates, got " +
                    std::to_string(x.size()));
  std::vector<double> h(grid.size());
  if (spec.form == LogitHazardSpec::Form::constant) {
    const double hc = sigmoid(spec.gamma[4](x));
    std::fill(h.begin(), h.end(), hc);
    return h;
  }
  std::array<double, 9> g{};
  for (std::size_t k = 0; k < 9; ++k) g[k] = spec.gamma[k](x);
  const auto a = mixture_weights(spec, x);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid[j];
    const double g_sin = g[0] * std::sin(g[1] * (t + g[2])) + g[3];
    const double g_con = g[4];
    const double g_acc = g[5] * t - 10.0;
    h[j] = sigmoid(a[0] * g_sin + a[1] * g_con + a[2] * g_acc);
  }
  return h;
}

/// Spec whose gamma_k use covariates (offset + 2k, offset + 2k + 1).
inline LogitHazardSpec pairwise_spec(const std::array<tables_v1::PairRow, 9>& rows, std::size_t covariate_dim,
                                     std::size_t offset = 0) {
  LogitHazardSpec spec;
  spec.covariate_dim = covariate_dim;
  for (std::size_t k = 0; k < 9; ++k)
    spec.gamma[k] = {rows[k].intercept,
                     {{offset + 2 * k, rows[k].w_first}, {offset + 2 * k + 1, rows[k].w_second}}};
  return spec;
}

inline LogitHazardSpec event_spec_v1() { return pairwise_spec(tables_v1::kEvent, 18); }
inline LogitHazardSpec complicated_censor_spec_v1() { return pairwise_spec(tables_v1::kComplicatedCensor, 18); }
inline LogitHazardSpec simple_censor_spec_v1() {
  LogitHazardSpec spec;
  spec.form = LogitHazardSpec::Form::constant;
  spec.covariate_dim = tables_v1::kSimpleCensorCovariates;
  spec.gamma[4].intercept = tables_v1::kSimpleCensorIntercept;
  for (std::size_t k = 0; k < tables_v1::kSimpleCensorCovariates; ++k)
    spec.gamma[4].terms.emplace_back(k, tables_v1::kSimpleCensorWeight);
  return spec;
}

struct EventDraw {
  double time = kInfinity;  // +inf when no event occurred on the grid
  bool beyond_grid = true;
};

/// Walks the grid drawing Bernoulli(h(t_j)); the first success is the event time.
inline EventDraw sample_event_time(std::span<const double> hazards, const TimeGrid& grid, Rng& rng) {
  if (hazards.size() != grid.size()) throw DataError("sample_event_time: hazard row does not match grid");
  for (std::size_t j = 0; j < hazards.size(); ++j)
    if (bernoulli(rng, hazards[j])) return {grid[j], false};
  return {};
}

struct ThresholdCensor {
  double c_star = 0.0;
  bool degenerate = false;  // Q(t_1) <= epsilon
};

/// C* is the first grid time where Q drops to epsilon or below, so that
/// 1{C* > t} = 1{Q(t) > epsilon} at every grid time. When Q stays above
/// epsilon, C* is the last grid time.
inline ThresholdCensor censor_time_from_threshold(std::span<const double> q, const TimeGrid& grid, double epsilon) {
  if (q.size() != grid.size()) throw DataError("censor_time_from_threshold: Q does not match grid");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DataError("censor_time_from_threshold: epsilon must be in (0, 1)");
  for (std::size_t j = 1; j < q.size(); ++j)
    if (q[j] > q[j - 1]) throw DataError("censor_time_from_threshold: Q is not monotone");
  for (std::size_t j = 0; j < q.size(); ++j)
    if (q[j] <= epsilon) return {grid[j], j == 0};
  return {grid.back(), false};
}

struct CensoredObservation {
  double duration;
  bool event;
};

/// T = min(T*, C*), D = 1{T* <= C*}; ties count as events.
inline CensoredObservation apply_censoring(double t_star, double c_star) noexcept {
  if (t_star <= c_star) return {t_star, true};
  return {c_star, false};
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class ScenarioKind { constant_hazard, complicated_censoring, simple_censoring };

inline std::string_view to_string(ScenarioKind k) noexcept {
  switch (k) {
    case ScenarioKind::constant_hazard: return "constant-hazard";
    case ScenarioKind::complicated_censoring: return "complicated-censoring";
    case ScenarioKind::simple_censoring: return "simple-censoring";
  }
  return "";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "constant-hazard") return ScenarioKind::constant_hazard;
  if (s == "complicated-censoring") return ScenarioKind::complicated_censoring;
  if (s == "simple-censoring") return ScenarioKind::simple_censoring;
  throw DataError("unknown scenario kind '" + std::string(s) + "'");
}

struct ScenarioOptions {
  /// Constant-hazard only: append C*/100 as a covariate.
  bool expose_censor_time = false;
  /// Compute the n x |grid| true survival matrix.
  bool keep_true_survival = true;
};

struct ScenarioOutput {
  ScenarioKind kind;
  TimeGrid grid;
  RightCensoredDataset dataset;
  std::optional<SurvivalPrediction> true_survival;
  std::vector<double> t_star;  // +inf beyond the grid
  std::vector<double> c_star;
  std::size_t beyond_grid = 0;
  std::size_t degenerate_censor = 0;
  /// Set when censoring is random Uniform(lo, hi) rather than a threshold rule.
  std::optional<UniformCensorSurvival> random_censoring;

  /// The known administrative censoring survival 1{C*_i > t} per subject.
  std::vector<StepSurvival> censor_step_curves() const {
    std::vector<StepSurvival> out;
    out.reserve(c_star.size());
    for (double c : c_star) out.push_back(admin_step_censor(c));
    return out;
  }

  double censored_fraction() const {
    if (dataset.empty()) return 0.0;
    std::size_t censored = 0;
    for (const auto& r : dataset.records()) censored += r.event ? 0 : 1;
    return static_cast<double>(censored) / static_cast<double>(dataset.size());
  }
};

namespace detail {

enum Stream : std::uint64_t { kEventCovariates = 1, kCensorCovariates = 2, kEventDraws = 3, kCensorDraws = 4 };

inline Rng subject_stream(std::uint64_t seed, Stream stream, std::size_t subject) {
  return Rng(derive_seed(seed, {static_cast<std::uint64_t>(stream), static_cast<std::uint64_t>(subject)}));
}

inline std::vector<double> uniform_covariates(Rng& rng, std::size_t count) {
  std::vector<double> x(count);
  for (double& v : x) v = uniform(rng, -1.0, 1.0);
  return x;
}

}  // namespace detail

/// Simulated dataset with full ground truth. Every subject draws from its own
/// (seed, stream, subject) generators, and event and censoring covariates come
/// from separate streams.
inline ScenarioOutput build_scenario(ScenarioKind kind, std::size_t n, std::uint64_t seed,
                                     const ScenarioOptions& options = {}) {
  if (n == 0) throw DataError("build_scenario: n must be >= 1");
  const TimeGrid grid = TimeGrid::equidistant(100.0, 1000);
  std::vector<SubjectRecord> records(n);
  std::vector<double> t_star(n), c_star(n);
  std::size_t beyond = 0, degenerate = 0;
  Matrix surv;
  if (options.keep_true_survival) surv.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));
  std::optional<UniformCensorSurvival> random_censoring;
  std::size_t covariate_dim = 0;

  auto store_survival = [&](std::size_t i, std::span<const double> h) {
    if (!options.keep_true_survival) return;
    double s = 1.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
      s *= 1.0 - h[j];
      surv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    }
  };

  if (kind == ScenarioKind::constant_hazard) {
    random_censoring = UniformCensorSurvival{0.0, 100.0};
    covariate_dim = options.expose_censor_time ? 2 : 1;
    const std::vector<double> h(grid.size(), tables_v1::kConstantHazard);
    for (std::size_t i = 0; i < n; ++i) {
      Rng cov = detail::subject_stream(seed, detail::kEventCovariates, i);
      Rng ev = detail::subject_stream(seed, detail::kEventDraws, i);
      Rng cen = detail::subject_stream(seed, detail::kCensorDraws, i);
      const double noise = uniform(cov, -1.0, 1.0);
      const EventDraw draw = sample_event_time(h, grid, ev);
      const double c = uniform(cen, 0.0, 100.0);
      records[i].covariates = {noise};
      if (options.expose_censor_time) records[i].covariates.push_back(c / 100.0);
      t_star[i] = draw.time;
      c_star[i] = c;
      beyond += draw.beyond_grid ? 1 : 0;
      store_survival(i, h);
    }
  } else {
    const LogitHazardSpec event_spec = event_spec_v1();
    const LogitHazardSpec censor_spec =
        kind == ScenarioKind::complicated_censoring ? complicated_censor_spec_v1() : simple_censor_spec_v1();
    covariate_dim = event_spec.covariate_dim + censor_spec.covariate_dim;
    std::vector<double> q(grid.size());
    for (std::size_t i = 0; i < n; ++i) {
      Rng ecov = detail::subject_stream(seed, detail::kEventCovariates, i);
      Rng ccov = detail::subject_stream(seed, detail::kCensorCovariates, i);
      Rng ev = detail::subject_stream(seed, detail::kEventDraws, i);
      const auto xe = detail::uniform_covariates(ecov, event_spec.covariate_dim);
      const auto xc = detail::uniform_covariates(ccov, censor_spec.covariate_dim);
      const auto h = eval_logit_hazard(event_spec, xe, grid);
      const auto hc = eval_logit_hazard(censor_spec, xc, grid);
      double s = 1.0;
      for (std::size_t j = 0; j < grid.size(); ++j) q[j] = (s *= 1.0 - hc[j]);
      const ThresholdCensor tc = censor_time_from_threshold(q, grid, tables_v1::kEpsilon);
      const EventDraw draw = sample_event_time(h, grid, ev);
      records[i].covariates = xe;
      records[i].covariates.insert(records[i].covariates.end(), xc.begin(), xc.end());
      t_star[i] = draw.time;
      c_star[i] = tc.c_star;
      beyond += draw.beyond_grid ? 1 : 0;
      degenerate += tc.degenerate ? 1 : 0;
      store_survival(i, h);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto obs = apply_censoring(t_star[i], c_star[i]);
    records[i].duration = obs.duration;
    records[i].event = obs.event;
    records[i].admin_censor_time = c_star[i];
  }

  ScenarioOutput out{kind, grid, RightCensoredDataset(std::move(records), covariate_dim), std::nullopt,
                     std::move(t_star), std::move(c_star), beyond, degenerate, random_censoring};
  if (options.keep_true_survival) out.true_survival.emplace(grid, std::move(surv));
  return out;
}

}  // namespace adminbrier
