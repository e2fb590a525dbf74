#pragma once

// Experiment pipeline behind the command-line tool: simulate -> train ->
// evaluate -> report. Each step reads and writes plain files so runs can be
// resumed or inspected between steps.
//
// Layout of a simulation directory:
//   <dir>/{train,valid,test}/data.csv, truth.csv, [S.csv]
// Layout of a model directory:
//   <dir>/<model>.json, trajectory_<model>.csv,
//   censor_kaplan_meier.json, [censor_logistic_hazard.json, trajectory_censor.csv]
// Layout of a score directory:
//   <dir>/<model>__<metric>__<cap>.csv, summary.json

#include "adminbrier/censoring.hpp"
#include "adminbrier/core.hpp"
#include "adminbrier/io.hpp"
#include "adminbrier/metrics.hpp"
#include "adminbrier/models.hpp"
#include "adminbrier/simgen.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace adminbrier {

/// Bad command-line usage or configuration.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<const char*, 3> kSplits{"train", "valid", "test"};
inline constexpr const char* kTrueSurvivalModel = "true-survival";

struct ModelEntry {
  std::string name;
  ModelKind kind = ModelKind::logistic_hazard;
  std::vector<std::size_t> features;  // empty: all covariates
};

struct MetricEntry {
  enum class Kind { uncensored, admin, ipcw };
  enum class Censor { kaplan_meier, true_step, fitted };
  Kind kind = Kind::admin;
  Censor censor = Censor::kaplan_meier;
  WeightCap cap = WeightCap::unbounded();
  bool normalize = true;

  std::string key() const {
    switch (kind) {
      case Kind::uncensored: return "uncensored";
      case Kind::admin: return "admin";
      case Kind::ipcw: break;
    }
    std::string k = censor == Censor::kaplan_meier ? "ipcw-km" : censor == Censor::true_step ? "ipcw-true" : "ipcw-fitted";
    if (!normalize) k += "-divn";
    return k;
  }
  std::string cap_label() const { return kind == Kind::ipcw ? cap.label() : std::string("none"); }
  std::string file_stem(const std::string& model) const { return model + "__" + key() + "__" + cap_label(); }
};

struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::simple_censoring;
  bool expose_censor_time = false;
  std::size_t n_train = 10000;
  std::size_t n_valid = 4000;
  std::size_t n_test = 10000;
  std::uint64_t seed = 1;
  double horizon = 100.0;
  std::size_t model_grid_size = 50;
  std::size_t eval_grid_size = 1000;
  MlpSpec network;
  TrainConfig training;
  std::vector<ModelEntry> event_models{{"logistic-hazard", ModelKind::logistic_hazard, {}}, {"bce", ModelKind::bce, {}}};
  bool fit_censor_model = true;
  std::vector<std::size_t> censor_features;
  std::vector<MetricEntry> metrics{
      {MetricEntry::Kind::uncensored},
      {MetricEntry::Kind::admin},
      {MetricEntry::Kind::ipcw, MetricEntry::Censor::kaplan_meier},
      {MetricEntry::Kind::ipcw, MetricEntry::Censor::true_step},
      {MetricEntry::Kind::ipcw, MetricEntry::Censor::fitted, WeightCap::at(100.0)},
      {MetricEntry::Kind::ipcw, MetricEntry::Censor::fitted, WeightCap::at(1000.0)},
  };
  bool include_true_survival = true;
  /// Time window for the averages in summary.json; defaults to the upper half of the horizon.
  std::optional<std::pair<double, double>> summary_window;
  std::vector<std::string> truth_matrix_splits{"test"};
  std::filesystem::path output_dir = "out";

  std::pair<double, double> window() const { return summary_window.value_or(std::pair{horizon / 2.0, horizon}); }
  TimeGrid model_grid() const { return TimeGrid::equidistant(horizon, model_grid_size); }
  TimeGrid eval_grid() const { return TimeGrid::equidistant(horizon, eval_grid_size); }

  void validate() const {
    if (n_train == 0 || n_valid == 0 || n_test == 0) throw UsageError("config: split sizes must be positive");
    if (model_grid_size == 0 || eval_grid_size == 0) throw UsageError("config: grid sizes must be positive");
    if (!(horizon > 0.0)) throw UsageError("config: horizon must be positive");
    if (metrics.empty()) throw UsageError("config: metric list is empty");
    std::set<std::string> names;
    for (const auto& m : event_models) {
      if (m.name.empty() || m.name.find("__") != std::string::npos || m.name.find('/') != std::string::npos)
        throw UsageError("config: invalid model name '" + m.name + "'");
      if (m.name == kTrueSurvivalModel) throw UsageError("config: model name '" + m.name + "' is reserved");
      if (!names.insert(m.name).second) throw UsageError("config: duplicate model name '" + m.name + "'");
    }
    for (const auto& s : truth_matrix_splits)
      if (s != "train" && s != "valid" && s != "test") throw UsageError("config: unknown split '" + s + "'");
    try {
      network.validate();
      training.validate();
    } catch (const DataError& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

namespace detail {

inline MetricEntry metric_from_json(const nlohmann::json& j) {
  MetricEntry m;
  const auto kind = j.at("metric").get<std::string>();
  if (kind == "uncensored") m.kind = MetricEntry::Kind::uncensored;
  else if (kind == "admin") m.kind = MetricEntry::Kind::admin;
  else if (kind == "ipcw") m.kind = MetricEntry::Kind::ipcw;
  else throw UsageError("config: unknown metric '" + kind + "'");
  if (m.kind != MetricEntry::Kind::ipcw) return m;
  const auto censor = j.value("censor", std::string("kaplan-meier"));
  if (censor == "kaplan-meier") m.censor = MetricEntry::Censor::kaplan_meier;
  else if (censor == "true") m.censor = MetricEntry::Censor::true_step;
  else if (censor == "fitted") m.censor = MetricEntry::Censor::fitted;
  else throw UsageError("config: unknown censoring estimate '" + censor + "'");
  if (j.contains("cap") && !j.at("cap").is_null()) {
    const double cap = j.at("cap").get<double>();
    if (!(cap >= 1.0)) throw UsageError("config: weight caps must be >= 1");
    m.cap = WeightCap::at(cap);
  }
  m.normalize = j.value("normalize", true);
  return m;
}

inline nlohmann::json metric_to_json(const MetricEntry& m) {
  switch (m.kind) {
    case MetricEntry::Kind::uncensored: return {{"metric", "uncensored"}};
    case MetricEntry::Kind::admin: return {{"metric", "admin"}};
    case MetricEntry::Kind::ipcw: break;
  }
  nlohmann::json j{{"metric", "ipcw"},
                   {"censor", m.censor == MetricEntry::Censor::kaplan_meier ? "kaplan-meier"
                              : m.censor == MetricEntry::Censor::true_step  ? "true"
                                                                            : "fitted"},
                   {"normalize", m.normalize}};
  j["cap"] = m.cap.bounded() ? nlohmann::json(m.cap.max_weight()) : nlohmann::json(nullptr);
  return j;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw UsageError("config: expected a JSON object");
    if (j.contains("scenario")) {
      try {
        c.scenario = parse_scenario_kind(j.at("scenario").get<std::string>());
      } catch (const DataError& e) {
        throw UsageError(std::string("config: ") + e.what());
      }
    }
    c.expose_censor_time = j.value("expose_censor_time", c.expose_censor_time);
    c.n_train = j.value("n_train", c.n_train);
    c.n_valid = j.value("n_valid", c.n_valid);
    c.n_test = j.value("n_test", c.n_test);
    c.seed = j.value("seed", c.seed);
    c.horizon = j.value("horizon", c.horizon);
    c.model_grid_size = j.value("model_grid_size", c.model_grid_size);
    c.eval_grid_size = j.value("eval_grid_size", c.eval_grid_size);
    if (j.contains("network")) {
      const auto& n = j.at("network");
      c.network.hidden = n.value("hidden", c.network.hidden);
      c.network.dropout = n.value("dropout", c.network.dropout);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
      c.training.batch_size = t.value("batch_size", c.training.batch_size);
      c.training.max_epochs = t.value("max_epochs", c.training.max_epochs);
      c.training.patience = t.value("patience", c.training.patience);
    }
    if (j.contains("event_models")) {
      c.event_models.clear();
      for (const auto& m : j.at("event_models")) {
        ModelEntry e;
        e.name = m.at("name").get<std::string>();
        try {
          e.kind = parse_model_kind(m.value("kind", e.name));
        } catch (const DataError& err) {
          throw UsageError(std::string("config: ") + err.what());
        }
        e.features = m.value("features", std::vector<std::size_t>{});
        c.event_models.push_back(std::move(e));
      }
    }
    c.fit_censor_model = j.value("fit_censor_model", c.fit_censor_model);
    c.censor_features = j.value("censor_features", c.censor_features);
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& m : j.at("metrics")) c.metrics.push_back(detail::metric_from_json(m));
    }
    c.include_true_survival = j.value("include_true_survival", c.include_true_survival);
    if (j.contains("summary_window") && !j.at("summary_window").is_null()) {
      const auto w = j.at("summary_window").get<std::vector<double>>();
      if (w.size() != 2 || !(w[0] <= w[1])) throw UsageError("config: summary_window must be [lo, hi]");
      c.summary_window = std::pair{w[0], w[1]};
    }
    c.truth_matrix_splits = j.value("truth_matrix_splits", c.truth_matrix_splits);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : event_models)
    models.push_back({{"name", m.name}, {"kind", std::string(adminbrier::to_string(m.kind))}, {"features", m.features}});
  nlohmann::json metric_list = nlohmann::json::array();
  for (const auto& m : metrics) metric_list.push_back(detail::metric_to_json(m));
  nlohmann::json j{{"scenario", std::string(adminbrier::to_string(scenario))},
                   {"expose_censor_time", expose_censor_time},
                   {"n_train", n_train},
                   {"n_valid", n_valid},
                   {"n_test", n_test},
                   {"seed", seed},
                   {"horizon", horizon},
                   {"model_grid_size", model_grid_size},
                   {"eval_grid_size", eval_grid_size},
                   {"network", {{"hidden", network.hidden}, {"dropout", network.dropout}}},
                   {"training",
                    {{"learning_rate", training.learning_rate},
                     {"batch_size", training.batch_size},
                     {"max_epochs", training.max_epochs},
                     {"patience", training.patience}}},
                   {"event_models", models},
                   {"fit_censor_model", fit_censor_model},
                   {"censor_features", censor_features},
                   {"metrics", metric_list},
                   {"include_true_survival", include_true_survival},
                   {"truth_matrix_splits", truth_matrix_splits},
                   {"output_dir", output_dir.string()}};
  const auto w = window();
  j["summary_window"] = {w.first, w.second};
  return j;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateSummary {
  std::map<std::string, double> censored_fraction;  // per split
  std::map<std::string, std::size_t> rows;
};

inline std::uint64_t split_seed(std::uint64_t seed, std::size_t split) { return derive_seed(seed, {0x5350ULL, split}); }

/// Writes train/valid/test datasets and ground truth under `out_dir`.
inline SimulateSummary cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  const std::array<std::size_t, 3> sizes{config.n_train, config.n_valid, config.n_test};
  SimulateSummary summary;
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    const std::string split = kSplits[s];
    const bool want_matrix = std::find(config.truth_matrix_splits.begin(), config.truth_matrix_splits.end(), split) !=
                             config.truth_matrix_splits.end();
    ScenarioOptions opt;
    opt.expose_censor_time = config.expose_censor_time;
    opt.keep_true_survival = want_matrix;
    const ScenarioOutput sc = build_scenario(config.scenario, sizes[s], split_seed(config.seed, s), opt);
    const auto dir = out_dir / split;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
    write_dataset_csv(dir / "data.csv", sc.dataset);
    write_truth_csv(dir / "truth.csv", sc.t_star, sc.c_star);
    if (want_matrix) write_prediction_csv(dir / "S.csv", *sc.true_survival);
    summary.censored_fraction[split] = sc.censored_fraction();
    summary.rows[split] = sc.dataset.size();
  }
  return summary;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainSummary {
  std::map<std::string, TrainReport> reports;  // per model name, plus "censor" when fitted
};

namespace detail {

inline void write_trajectory_csv(const std::filesystem::path& path, const TrainReport& report) {
  auto out = open_output(path);
  out << "epoch,train_loss,valid_loss\n";
  for (const auto& e : report.trajectory) {
    out << e.epoch << ',';
    if (!std::isnan(e.train_loss)) out << format_double(e.train_loss);
    out << ',' << format_double(e.valid_loss) << '\n';
  }
  finish_output(out, path);
}

inline RightCensoredDataset load_split(const std::filesystem::path& data_dir, const std::string& split) {
  const auto path = data_dir / split / "data.csv";
  if (!std::filesystem::exists(path)) throw DataError("missing dataset file '" + path.string() + "'");
  auto data = read_dataset_csv(path);
  const auto violations = validate_dataset(data);
  if (!violations.empty())
    throw DataError(path.string() + ": record " + std::to_string(violations.front().record) + ": " +
                    violations.front().rule);
  return data;
}

}  // namespace detail

/// Trains every configured event model and the censoring estimators on the
/// training split, with early stopping on the validation split.
inline TrainSummary cmd_train(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                              const std::filesystem::path& out_dir) {
  config.validate();
  const auto train_data = detail::load_split(data_dir, "train");
  const auto valid_data = detail::load_split(data_dir, "valid");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  const TimeGrid grid = config.model_grid();
  TrainSummary summary;
  for (std::size_t k = 0; k < config.event_models.size(); ++k) {
    const auto& entry = config.event_models[k];
    TrainConfig tc = config.training;
    tc.seed = derive_seed(config.seed, {0x4D4FULL, k});
    auto trained = train(entry.kind, train_data, valid_data, grid, config.network, tc, entry.features);
    write_json_file(out_dir / (entry.name + ".json"), trained.model.to_json());
    detail::write_trajectory_csv(out_dir / ("trajectory_" + entry.name + ".csv"), trained.report);
    summary.reports.emplace(entry.name, std::move(trained.report));
  }

  write_json_file(out_dir / "censor_kaplan_meier.json",
                  CensorModel::from_kaplan_meier(reverse_kaplan_meier(train_data)).to_json());
  if (config.fit_censor_model) {
    TrainConfig tc = config.training;
    tc.seed = derive_seed(config.seed, {0x4345ULL});
    auto [censor, report] = fit_censor_logistic_hazard(train_data, valid_data, grid, config.network, tc,
                                                       config.censor_features);
    write_json_file(out_dir / "censor_logistic_hazard.json", censor.to_json());
    detail::write_trajectory_csv(out_dir / "trajectory_censor.csv", report);
    summary.reports.emplace("censor", std::move(report));
  }
  return summary;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateSummary {
  std::pair<double, double> window;
  /// model -> "<metric>__<cap>" -> average score over the window (nullopt if no data).
  std::map<std::string, std::map<std::string, std::optional<double>>> averages;
  std::vector<std::filesystem::path> files;
};

/// Scores every model (and the true survival, when available) on the test
/// split with every configured metric; one ScoreCurve CSV per combination.
inline EvaluateSummary cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                    const std::filesystem::path& models_dir, const std::filesystem::path& out_dir) {
  config.validate();
  const auto test = detail::load_split(data_dir, "test");
  const TimeGrid eval_grid = config.eval_grid();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  std::optional<GroundTruth> truth;
  if (std::filesystem::exists(data_dir / "test" / "truth.csv")) {
    truth = read_truth_csv(data_dir / "test" / "truth.csv");
    if (truth->t_star.size() != test.size()) throw DataError("truth.csv row count does not match test data");
  }

  // Censoring curves are shared across models; load what the metric list needs.
  std::optional<StepSurvival> km;
  std::optional<std::vector<StepSurvival>> true_step, fitted;
  for (const auto& m : config.metrics) {
    if (m.kind != MetricEntry::Kind::ipcw) continue;
    if (m.censor == MetricEntry::Censor::kaplan_meier && !km) {
      const auto cm = CensorModel::from_json(read_json_file(models_dir / "censor_kaplan_meier.json"));
      if (!cm.kaplan_meier_curve()) throw DataError("censor_kaplan_meier.json does not hold a Kaplan-Meier curve");
      km = *cm.kaplan_meier_curve();
    } else if (m.censor == MetricEntry::Censor::true_step && !true_step) {
      true_step = CensorModel::admin_step().curves_for(test);
    } else if (m.censor == MetricEntry::Censor::fitted && !fitted) {
      fitted = CensorModel::from_json(read_json_file(models_dir / "censor_logistic_hazard.json")).curves_for(test);
    }
  }

  EvaluateSummary summary;
  summary.window = config.window();

  auto score_model = [&](const std::string& name, const SurvivalPrediction& pred) {
    for (const auto& m : config.metrics) {
      std::optional<ScoreCurve> curve;
      switch (m.kind) {
        case MetricEntry::Kind::uncensored:
          if (!truth) throw DataError("uncensored Brier score needs test/truth.csv");
          curve = brier_uncensored(truth->t_star, pred);
          break;
        case MetricEntry::Kind::admin:
          curve = brier_admin(test, pred);
          break;
        case MetricEntry::Kind::ipcw:
          if (m.censor == MetricEntry::Censor::kaplan_meier) curve = brier_ipcw(test, pred, *km, m.cap, m.normalize);
          else if (m.censor == MetricEntry::Censor::true_step)
            curve = brier_ipcw(test, pred, *true_step, m.cap, m.normalize);
          else
            curve = brier_ipcw(test, pred, *fitted, m.cap, m.normalize);
          break;
      }
      const auto path = out_dir / (m.file_stem(name) + ".csv");
      write_score_curve_csv(path, *curve);
      summary.files.push_back(path);
      summary.averages[name][m.key() + "__" + m.cap_label()] =
          time_average(*curve, summary.window.first, summary.window.second);
    }
  };

  for (const auto& entry : config.event_models) {
    const auto model = DiscreteTimeModel::from_json(read_json_file(models_dir / (entry.name + ".json")));
    const auto pred = interpolate_cdi(model.predict_survival(test), eval_grid);
    score_model(entry.name, pred);
  }
  const auto s_path = data_dir / "test" / "S.csv";
  if (config.include_true_survival && std::filesystem::exists(s_path)) {
    auto s = read_prediction_csv(s_path);
    if (s.subjects() != test.size()) throw DataError("S.csv row count does not match test data");
    if (!(s.grid() == eval_grid)) s = interpolate_cdi(s, eval_grid);
    score_model(kTrueSurvivalModel, s);
  }

  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [model, per_metric] : summary.averages)
    for (const auto& [metric, value] : per_metric)
      scores[model][metric] = value ? nlohmann::json(*value) : nlohmann::json(nullptr);
  write_json_file(out_dir / "summary.json",
                  {{"window", {summary.window.first, summary.window.second}}, {"time_averaged_scores", scores}});
  return summary;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ScoreFileLabel {
  std::string model, metric, cap;
};

/// Parses "<model>__<metric>__<cap>.csv".
inline ScoreFileLabel parse_score_file_name(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  const auto a = stem.find("__");
  const auto b = a == std::string::npos ? a : stem.find("__", a + 2);
  if (a == std::string::npos || b == std::string::npos || stem.find("__", b + 2) != std::string::npos)
    throw DataError("score file name '" + path.filename().string() + "' is not <model>__<metric>__<cap>.csv");
  return {stem.substr(0, a), stem.substr(a + 2, b - a - 2), stem.substr(b + 2)};
}

/// Merges score files into one long-format CSV: time,model,metric,cap,score.
/// Returns the number of data rows written.
inline std::size_t cmd_report(std::span<const std::filesystem::path> score_files, const std::filesystem::path& out_path) {
  if (score_files.empty()) throw UsageError("report: no score files given");
  std::vector<std::pair<ScoreFileLabel, ScoreCurve>> curves;
  for (const auto& f : score_files) {
    auto label = parse_score_file_name(f);
    curves.emplace_back(std::move(label), read_score_curve_csv(f));
    if (!(curves.back().second.grid == curves.front().second.grid))
      throw DataError("report: '" + f.string() + "' uses a different time grid than '" + score_files[0].string() + "'");
  }
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  auto out = detail::open_output(out_path);
  out << "time,model,metric,cap,score\n";
  std::size_t rows = 0;
  for (const auto& [label, curve] : curves)
    for (std::size_t j = 0; j < curve.grid.size(); ++j) {
      out << format_double(curve.grid[j]) << ',' << label.model << ',' << label.metric << ',' << label.cap << ',';
      if (curve.score[j]) out << format_double(*curve.score[j]);
      out << '\n';
      ++rows;
    }
  detail::finish_output(out, out_path);
  return rows;
}

}  // namespace adminbrier
