#pragma once

// Discrete-time survival predictors on a fixed output grid: the
// Logistic-Hazard model (sigmoid hazards, survival by cumulative product) and
// the BCE method (one sigmoid classifier per grid time). Also survival
// reconstruction, constant density interpolation and the population minimizer
// of the expected BCE loss.

#include "adminbrier/core.hpp"
#include "adminbrier/losses.hpp"
#include "adminbrier/mlp.hpp"
#include "adminbrier/random.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adminbrier {

// ---------------------------------------------------------------------------
// Survival reconstruction and interpolation
// ---------------------------------------------------------------------------

/// S(t_j) = prod_{k <= j} (1 - h(t_k)), row by row.
inline SurvivalPrediction survival_from_hazards(const Matrix& hazards, const TimeGrid& grid) {
  if (static_cast<std::size_t>(hazards.cols()) != grid.size())
    throw DataError("survival_from_hazards: hazard columns do not match grid");
  Matrix s(hazards.rows(), hazards.cols());
  for (Eigen::Index i = 0; i < hazards.rows(); ++i) {
    double surv = 1.0;
    for (Eigen::Index j = 0; j < hazards.cols(); ++j) {
      const double h = hazards(i, j);
      if (!(h >= 0.0 && h <= 1.0)) throw DataError("survival_from_hazards: hazard outside [0, 1]");
      surv *= 1.0 - h;
      s(i, j) = surv;
    }
  }
  return SurvivalPrediction(grid, std::move(s));
}

/// Constant density interpolation: survival is linear between grid points,
/// anchored at S(0) = 1. Rows are not monotonized.
inline SurvivalPrediction interpolate_cdi(const SurvivalPrediction& pred, const TimeGrid& fine) {
  const TimeGrid& coarse = pred.grid();
  if (fine.back() > coarse.back()) throw DataError("interpolate_cdi: fine grid extends beyond the last prediction time");
  const auto ct = coarse.times();
  Matrix out(static_cast<Eigen::Index>(pred.subjects()), static_cast<Eigen::Index>(fine.size()));
  for (std::size_t q = 0; q < fine.size(); ++q) {
    const double t = fine[q];
    const auto it = std::lower_bound(ct.begin(), ct.end(), t);
    const auto k = static_cast<std::size_t>(it - ct.begin());
    const auto col = static_cast<Eigen::Index>(q);
    if (*it == t) {
      out.col(col) = pred.values().col(static_cast<Eigen::Index>(k));
      continue;
    }
    const double t0 = k == 0 ? 0.0 : ct[k - 1];
    const double w = (t - t0) / (ct[k] - t0);
    for (std::size_t i = 0; i < pred.subjects(); ++i) {
      const double s0 = k == 0 ? 1.0 : pred(i, k - 1);
      const double s1 = pred(i, k);
      out(static_cast<Eigen::Index>(i), col) = s0 + w * (s1 - s0);
    }
  }
  return SurvivalPrediction(fine, std::move(out));
}

/// Minimizer of the expected BCE loss on a grid:
///   pi*(t_j) = S_j G_j / (S_j G_j + sum_{k <= j} G(t_k-) f_k),  G(t_k-) = G_{k-1}, G_{-1} = 1.
/// S_j is expected to equal 1 - sum_{k <= j} f_k. Returns 0 where numerator and
/// denominator are both 0.
inline std::vector<double> bce_population_minimizer(std::span<const double> surv, std::span<const double> censor_surv,
                                                    std::span<const double> density) {
  if (surv.size() != censor_surv.size() || surv.size() != density.size())
    throw DataError("bce_population_minimizer: inputs differ in length");
  std::vector<double> out(surv.size());
  double observed_events = 0.0;
  double g_prev = 1.0;
  for (std::size_t j = 0; j < surv.size(); ++j) {
    observed_events += g_prev * density[j];
    const double num = surv[j] * censor_surv[j];
    const double den = num + observed_events;
    out[j] = den > 0.0 ? num / den : 0.0;
    g_prev = censor_surv[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

enum class ModelKind { logistic_hazard, bce };

inline std::string_view to_string(ModelKind k) noexcept {
  return k == ModelKind::logistic_hazard ? "logistic-hazard" : "bce";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "logistic-hazard") return ModelKind::logistic_hazard;
  if (s == "bce") return ModelKind::bce;
  throw DataError("unknown model kind '" + std::string(s) + "'");
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 800;
  std::size_t patience = 40;  // epochs without validation improvement
  std::uint64_t seed = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw DataError("train config: learning rate must be > 0");
    if (batch_size == 0) throw DataError("train config: batch size must be >= 1");
    if (patience == 0) throw DataError("train config: patience must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // NaN for epoch 0 (before any update)
  double valid_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> trajectory;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
};

class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::size_t epoch, std::vector<EpochRecord> trajectory)
      : NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
        epoch_(epoch),
        trajectory_(std::move(trajectory)) {}
  std::size_t epoch() const noexcept { return epoch_; }
  const std::vector<EpochRecord>& trajectory() const noexcept { return trajectory_; }

 private:
  std::size_t epoch_;
  std::vector<EpochRecord> trajectory_;
};

/// A network with one output node per grid time. For the Logistic-Hazard kind
/// the outputs are hazard logits, for the BCE kind survival logits.
class DiscreteTimeModel {
 public:
  DiscreteTimeModel(ModelKind kind, TimeGrid grid, std::vector<std::size_t> features, Mlp net)
      : kind_(kind), grid_(std::move(grid)), features_(std::move(features)), net_(std::move(net)) {
    if (net_.spec().output_dim != grid_.size()) throw DataError("model: output width must equal grid size");
    if (!features_.empty() && features_.size() != net_.spec().input_dim)
      throw DataError("model: feature list does not match network input width");
  }

  ModelKind kind() const noexcept { return kind_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const Mlp& network() const noexcept { return net_; }
  Mlp& network() noexcept { return net_; }
  /// Dataset covariate columns fed to the network; empty means all of them.
  const std::vector<std::size_t>& features() const noexcept { return features_; }

  Eigen::MatrixXd inputs(const RightCensoredDataset& data) const {
    auto x = data.feature_matrix(features_);
    if (static_cast<std::size_t>(x.rows()) != net_.spec().input_dim)
      throw DataError("model: dataset has " + std::to_string(x.rows()) + " input features, model expects " +
                      std::to_string(net_.spec().input_dim));
    return x;
  }

  /// Network outputs as an n x m matrix of logits.
  Matrix logits(const RightCensoredDataset& data) const { return net_.forward(inputs(data)).transpose(); }

  /// Survival on the model grid. Hazard models give monotone rows, BCE models need not.
  SurvivalPrediction predict_survival(const RightCensoredDataset& data) const {
    Matrix p = logits(data).unaryExpr([](double z) { return sigmoid(z); });
    if (kind_ == ModelKind::logistic_hazard) return survival_from_hazards(p, grid_);
    return SurvivalPrediction(grid_, std::move(p));
  }

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net_.layers()) {
      std::vector<double> w;
      w.reserve(static_cast<std::size_t>(layer.weight.size()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
      std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
      layers.push_back({{"rows", layer.weight.rows()}, {"cols", layer.weight.cols()}, {"weight", w}, {"bias", b}});
    }
    const auto& spec = net_.spec();
    const auto t = grid_.times();
    return {{"format", "adminbrier-model"},
            {"version", 1},
            {"kind", std::string(to_string(kind_))},
            {"spec",
             {{"input_dim", spec.input_dim},
              {"hidden", spec.hidden},
              {"dropout", spec.dropout},
              {"output_dim", spec.output_dim}}},
            {"grid", std::vector<double>(t.begin(), t.end())},
            {"features", features_},
            {"layers", layers}};
  }

  static DiscreteTimeModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format").get<std::string>() != "adminbrier-model") throw DataError("checkpoint: wrong format tag");
      MlpSpec spec;
      const auto& js = j.at("spec");
      spec.input_dim = js.at("input_dim").get<std::size_t>();
      spec.hidden = js.at("hidden").get<std::vector<std::size_t>>();
      spec.dropout = js.at("dropout").get<double>();
      spec.output_dim = js.at("output_dim").get<std::size_t>();
      std::vector<DenseLayer> layers;
      for (const auto& jl : j.at("layers")) {
        const auto rows = jl.at("rows").get<Eigen::Index>();
        const auto cols = jl.at("cols").get<Eigen::Index>();
        const auto w = jl.at("weight").get<std::vector<double>>();
        const auto b = jl.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
          throw DataError("checkpoint: layer parameter count mismatch");
        DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (Eigen::Index r = 0; r < rows; ++r)
          for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = b[static_cast<std::size_t>(r)];
        layers.push_back(std::move(layer));
      }
      return DiscreteTimeModel(parse_model_kind(j.at("kind").get<std::string>()),
                               TimeGrid(j.at("grid").get<std::vector<double>>()),
                               j.value("features", std::vector<std::size_t>{}), Mlp(spec, std::move(layers)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("checkpoint: ") + e.what());
    }
  }

 private:
  ModelKind kind_;
  TimeGrid grid_;
  std::vector<std::size_t> features_;
  Mlp net_;
};

/// Logistic-Hazard model: h(t_j | x) = sigmoid(network output j).
class HazardModel : public DiscreteTimeModel {
 public:
  explicit HazardModel(DiscreteTimeModel m) : DiscreteTimeModel(std::move(m)) {
    if (kind() != ModelKind::logistic_hazard) throw DataError("expected a logistic-hazard model");
  }
  Matrix predict_hazards(const RightCensoredDataset& data) const {
    return logits(data).unaryExpr([](double z) { return sigmoid(z); });
  }
};

/// BCE method: pi(t_j | x) = sigmoid(network output j), one classifier per time.
class BceModel : public DiscreteTimeModel {
 public:
  explicit BceModel(DiscreteTimeModel m) : DiscreteTimeModel(std::move(m)) {
    if (kind() != ModelKind::bce) throw DataError("expected a bce model");
  }
};

namespace detail {

inline LossResult model_loss(ModelKind kind, const Matrix& logits, const DiscreteLabels& labels) {
  return kind == ModelKind::logistic_hazard ? logistic_hazard_nll_logits(logits, labels)
                                            : bce_multi_loss_logits(logits, labels);
}

inline DiscreteLabels subset(const DiscreteLabels& all, std::span<const std::size_t> rows) {
  DiscreteLabels out;
  out.grid_size = all.grid_size;
  out.index.reserve(rows.size());
  out.event.reserve(rows.size());
  for (std::size_t r : rows) {
    out.index.push_back(all.index[r]);
    out.event.push_back(all.event[r]);
  }
  return out;
}

}  // namespace detail

struct TrainedModel {
  DiscreteTimeModel model;
  TrainReport report;
};

/// Mini-batch Adam with early stopping on the validation loss (per subject).
/// Returns the parameters of the epoch with the lowest validation loss; ties
/// keep the earlier epoch. Deterministic for a fixed seed.
inline TrainedModel train(ModelKind kind, const RightCensoredDataset& train_data, const RightCensoredDataset& valid_data,
                          const TimeGrid& grid, MlpSpec spec, const TrainConfig& config,
                          std::vector<std::size_t> features = {}) {
  config.validate();
  if (train_data.empty() || valid_data.empty()) throw DataError("train: empty training or validation set");
  spec.input_dim = features.empty() ? train_data.covariate_dim() : features.size();
  spec.output_dim = grid.size();

  Rng rng(derive_seed(config.seed, {0x7472616eULL}));
  DiscreteTimeModel model(kind, grid, std::move(features), Mlp(spec, rng));

  const Eigen::MatrixXd x_train = model.inputs(train_data);
  const Eigen::MatrixXd x_valid = model.inputs(valid_data);
  const DiscreteLabels y_train = discretize_labels(train_data, grid);
  const DiscreteLabels y_valid = discretize_labels(valid_data, grid);
  const double n_valid = static_cast<double>(valid_data.size());

  auto validation_loss = [&](const Mlp& net) {
    Matrix logits = net.forward(x_valid).transpose();
    return detail::model_loss(kind, logits, y_valid).loss / n_valid;
  };

  TrainReport report;
  auto diverged = [&](std::size_t epoch) { return TrainingDiverged(epoch, report.trajectory); };

  double best;
  try {
    best = validation_loss(model.network());
  } catch (const NumericError&) {
    throw diverged(0);
  }
  report.trajectory.push_back({0, std::nan(""), best});
  report.best_epoch = 0;
  report.best_valid_loss = best;
  std::vector<DenseLayer> best_params = model.network().layers();

  Adam adam(config.learning_rate);
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_improvement = 0;
  Mlp::Tape tape;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      Eigen::MatrixXd xb(x_train.rows(), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t b = 0; b < rows.size(); ++b)
        xb.col(static_cast<Eigen::Index>(b)) = x_train.col(static_cast<Eigen::Index>(rows[b]));
      const DiscreteLabels yb = detail::subset(y_train, rows);

      Matrix logits = model.network().forward_train(xb, rng, tape).transpose();
      LossResult lr;
      try {
        lr = detail::model_loss(kind, logits, yb);
      } catch (const NumericError&) {
        throw diverged(epoch);
      }
      const double scale = 1.0 / static_cast<double>(rows.size());
      Eigen::MatrixXd grad_out = (lr.gradient * scale).transpose();
      adam.step(model.network(), model.network().backward(tape, grad_out));
      loss_sum += lr.loss * scale;
      ++batches;
    }

    double valid;
    try {
      valid = validation_loss(model.network());
    } catch (const NumericError&) {
      throw diverged(epoch);
    }
    report.trajectory.push_back({epoch, loss_sum / static_cast<double>(batches), valid});
    if (valid < best) {
      best = valid;
      best_params = model.network().layers();
      report.best_epoch = epoch;
      report.best_valid_loss = valid;
      since_improvement = 0;
    } else if (++since_improvement >= config.patience) {
      break;
    }
  }
  model.network().layers() = std::move(best_params);
  return {std::move(model), std::move(report)};
}

inline std::pair<HazardModel, TrainReport> train_logistic_hazard(const RightCensoredDataset& train_data,
                                                                 const RightCensoredDataset& valid_data,
                                                                 const TimeGrid& grid, MlpSpec spec,
                                                                 const TrainConfig& config,
                                                                 std::vector<std::size_t> features = {}) {
  auto t = train(ModelKind::logistic_hazard, train_data, valid_data, grid, std::move(spec), config, std::move(features));
  return {HazardModel(std::move(t.model)), std::move(t.report)};
}

inline std::pair<BceModel, TrainReport> train_bce(const RightCensoredDataset& train_data,
                                                  const RightCensoredDataset& valid_data, const TimeGrid& grid,
                                                  MlpSpec spec, const TrainConfig& config,
                                                  std::vector<std::size_t> features = {}) {
  auto t = train(ModelKind::bce, train_data, valid_data, grid, std::move(spec), config, std::move(features));
  return {BceModel(std::move(t.model)), std::move(t.report)};
}

}  // namespace adminbrier
