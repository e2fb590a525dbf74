#pragma once

// Censoring survival estimators G for IPCW weighting: (reverse) Kaplan-Meier,
// known administrative step functions, and a covariate-dependent
// Logistic-Hazard model fitted to the censoring times.

#include "adminbrier/core.hpp"
#include "adminbrier/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace adminbrier {

enum class TiePolicy {
  /// Subjects without the outcome at a tied time stay in the risk set (usual Kaplan-Meier).
  complement_at_risk,
  /// Subjects with the complementary outcome at a tied time leave the risk set
  /// first. Used for the censoring distribution, where events precede censorings.
  complement_leaves_first,
};

/// Product-limit estimator. `events[i] != 0` marks an observed outcome at durations[i].
inline StepSurvival kaplan_meier(std::span<const double> durations, std::span<const int> events,
                                 TiePolicy ties = TiePolicy::complement_at_risk) {
  if (durations.empty()) throw DataError("kaplan_meier: empty input");
  if (durations.size() != events.size()) throw DataError("kaplan_meier: durations and events differ in length");
  for (double t : durations)
    if (!(t >= 0.0) || !std::isfinite(t)) throw DataError("kaplan_meier: durations must be finite and >= 0");

  std::vector<std::size_t> order(durations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });

  std::vector<double> jumps, values;
  double surv = 1.0;
  std::size_t at_risk = durations.size();
  for (std::size_t k = 0; k < order.size();) {
    const double s = durations[order[k]];
    std::size_t outcomes = 0, others = 0;
    std::size_t next = k;
    for (; next < order.size() && durations[order[next]] == s; ++next)
      (events[order[next]] != 0 ? outcomes : others) += 1;
    if (outcomes > 0) {
      const std::size_t risk = ties == TiePolicy::complement_leaves_first ? at_risk - others : at_risk;
      surv *= 1.0 - static_cast<double>(outcomes) / static_cast<double>(risk);
      jumps.push_back(s);
      values.push_back(surv);
    }
    at_risk -= outcomes + others;
    k = next;
  }
  return StepSurvival(std::move(jumps), std::move(values), durations[order.back()]);
}

/// Kaplan-Meier estimate of the censoring survival G: censorings (D = 0) are
/// the outcome, and events at a tied time leave the risk set first.
inline StepSurvival reverse_kaplan_meier(std::span<const double> durations, std::span<const int> events) {
  std::vector<int> censored(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) censored[i] = events[i] != 0 ? 0 : 1;
  return kaplan_meier(durations, censored, TiePolicy::complement_leaves_first);
}

inline StepSurvival reverse_kaplan_meier(const RightCensoredDataset& data) {
  const auto t = data.durations();
  const auto d = data.events();
  return reverse_kaplan_meier(t, d);
}

/// G(t) = 1{c_star > t}: 1 on [0, c_star), 0 from c_star on.
inline StepSurvival admin_step_censor(double c_star) {
  if (!(c_star >= 0.0) || !std::isfinite(c_star)) throw DataError("admin_step_censor: censoring time must be >= 0");
  return StepSurvival({c_star}, {0.0});
}

/// Copy of `data` with the event indicator flipped (censorings become the
/// outcome) and administrative times dropped; input for censoring models.
inline RightCensoredDataset swap_events(const RightCensoredDataset& data) {
  std::vector<SubjectRecord> records(data.records().begin(), data.records().end());
  for (auto& r : records) {
    r.event = !r.event;
    r.admin_censor_time.reset();
  }
  return RightCensoredDataset(std::move(records), data.covariate_dim());
}

/// Fitted censoring distribution that yields a StepSurvival per subject.
class CensorModel {
 public:
  enum class Kind { kaplan_meier, admin_step, logistic_hazard };

  static CensorModel from_kaplan_meier(StepSurvival km) { return CensorModel(std::move(km)); }
  static CensorModel admin_step() { return CensorModel(AdminStep{}); }
  static CensorModel from_hazard_model(HazardModel model) { return CensorModel(std::move(model)); }

  Kind kind() const noexcept {
    if (std::holds_alternative<StepSurvival>(state_)) return Kind::kaplan_meier;
    if (std::holds_alternative<AdminStep>(state_)) return Kind::admin_step;
    return Kind::logistic_hazard;
  }

  /// One censoring survival curve per subject of `data`. A Logistic-Hazard
  /// censoring model gives a step function with jumps at its grid times, so
  /// G(T-) is the value at the largest grid time strictly below T.
  std::vector<StepSurvival> curves_for(const RightCensoredDataset& data) const {
    std::vector<StepSurvival> out;
    out.reserve(data.size());
    if (const auto* km = std::get_if<StepSurvival>(&state_)) {
      out.assign(data.size(), *km);
    } else if (std::holds_alternative<AdminStep>(state_)) {
      if (!data.admin_complete()) throw DataError("admin-step censoring needs administrative censoring times");
      for (const auto& r : data.records()) out.push_back(admin_step_censor(*r.admin_censor_time));
    } else {
      const auto& model = std::get<HazardModel>(state_);
      const SurvivalPrediction g = model.predict_survival(data);
      const auto grid = model.grid().times();
      const double support = grid.back();
      for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> values(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) values[j] = g(i, j);
        out.emplace_back(std::vector<double>(grid.begin(), grid.end()), std::move(values), support);
      }
    }
    return out;
  }

  const StepSurvival* kaplan_meier_curve() const noexcept { return std::get_if<StepSurvival>(&state_); }
  const HazardModel* hazard_model() const noexcept { return std::get_if<HazardModel>(&state_); }

  nlohmann::json to_json() const {
    nlohmann::json j{{"format", "adminbrier-censor-model"}, {"version", 1}};
    if (const auto* km = std::get_if<StepSurvival>(&state_)) {
      j["kind"] = "kaplan-meier";
      j["jump_times"] = std::vector<double>(km->jump_times().begin(), km->jump_times().end());
      j["values"] = std::vector<double>(km->values().begin(), km->values().end());
      j["support_end"] = km->support_end();
    } else if (std::holds_alternative<AdminStep>(state_)) {
      j["kind"] = "admin-step";
    } else {
      const auto& model = std::get<HazardModel>(state_);
      j["kind"] = "logistic-hazard";
      j["grid"] = model.to_json().at("grid");
      j["model"] = model.to_json();
    }
    return j;
  }

  static CensorModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format").get<std::string>() != "adminbrier-censor-model")
        throw DataError("censor model: wrong format tag");
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "kaplan-meier")
        return from_kaplan_meier(StepSurvival(j.at("jump_times").get<std::vector<double>>(),
                                              j.at("values").get<std::vector<double>>(),
                                              j.at("support_end").get<double>()));
      if (kind == "admin-step") return admin_step();
      if (kind == "logistic-hazard")
        return from_hazard_model(HazardModel(DiscreteTimeModel::from_json(j.at("model"))));
      throw DataError("censor model: unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("censor model: ") + e.what());
    }
  }

 private:
  struct AdminStep {};
  using State = std::variant<StepSurvival, AdminStep, HazardModel>;
  explicit CensorModel(State s) : state_(std::move(s)) {}
  State state_;
};

/// Fits a Logistic-Hazard model to (T, 1 - D) on the training split. No floor
/// is applied to G; the IPCW weight cap handles small values.
inline std::pair<CensorModel, TrainReport> fit_censor_logistic_hazard(const RightCensoredDataset& train_data,
                                                                      const RightCensoredDataset& valid_data,
                                                                      const TimeGrid& grid, MlpSpec spec,
                                                                      const TrainConfig& config,
                                                                      std::vector<std::size_t> features = {}) {
  auto [model, report] = train_logistic_hazard(swap_events(train_data), swap_events(valid_data), grid,
                                               std::move(spec), config, std::move(features));
  return {CensorModel::from_hazard_model(std::move(model)), std::move(report)};
}

}  // namespace adminbrier
