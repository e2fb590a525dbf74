#include "adminbrier/models.hpp"
#include "adminbrier/simgen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace adminbrier;

TEST(SurvivalFromHazards, Examples) {
  const TimeGrid g({1.0, 2.0, 3.0});
  const auto one = survival_from_hazards(Matrix::Zero(2, 3), g);
  EXPECT_TRUE(one.values().isOnes());
  Matrix h(1, 3);
  h << 1.0, 0.3, 0.2;
  const auto zero = survival_from_hazards(h, g);
  EXPECT_TRUE(zero.values().isZero());
  EXPECT_THROW(survival_from_hazards(Matrix::Constant(1, 3, 1.5), g), DataError);
}

TEST(SurvivalFromHazards, ConstantHazardPowerOracle) {
  const auto g = TimeGrid::equidistant(100.0, 1000);
  const double h = tables_v1::kConstantHazard;
  const auto s = survival_from_hazards(Matrix::Constant(1, 1000, h), g);
  EXPECT_NEAR(s(0, 999), std::pow(1.0 - h, 1000), 1e-12);
  EXPECT_NEAR(s(0, 499), std::exp(500 * std::log1p(-h)), 1e-12);
}

TEST(SurvivalFromHazards, RecursionHoldsExactly) {
  Rng rng(derive_seed(51, {}));
  const auto g = TimeGrid::equidistant(10.0, 20);
  Matrix h = Matrix::NullaryExpr(5, 20, [&] { return uniform01(rng); });
  const auto s = survival_from_hazards(h, g);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_EQ(s(i, 0), 1.0 - h(i, 0));
    for (Eigen::Index j = 1; j < 20; ++j) {
      EXPECT_EQ(s(i, j), s(i, j - 1) * (1.0 - h(i, j)));
      EXPECT_LE(s(i, j), s(i, j - 1));
    }
  }
}

TEST(Interpolate, Examples) {
  const TimeGrid coarse({10.0, 20.0});
  Matrix v(1, 2);
  v << 1.0, 0.0;
  const SurvivalPrediction p(coarse, v);
  EXPECT_NEAR(interpolate_cdi(p, TimeGrid({15.0}))(0, 0), 0.5, 1e-15);
  EXPECT_EQ(interpolate_cdi(p, coarse).values(), p.values());
  EXPECT_THROW(interpolate_cdi(p, TimeGrid({25.0})), DataError);

  Matrix w(1, 2);
  w << 0.6, 0.2;
  EXPECT_NEAR(interpolate_cdi(SurvivalPrediction(coarse, w), TimeGrid({5.0}))(0, 0), 0.8, 1e-15);
}

TEST(Interpolate, MonotoneRowsStayMonotone) {
  Rng rng(derive_seed(52, {}));
  const auto coarse = TimeGrid::equidistant(100.0, 50);
  const auto fine = TimeGrid::equidistant(100.0, 1000);
  Matrix h = Matrix::NullaryExpr(30, 50, [&] { return 0.1 * uniform01(rng); });
  const auto s = interpolate_cdi(survival_from_hazards(h, coarse), fine);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_LE(s(i, 0), 1.0);
    for (std::size_t j = 1; j < fine.size(); ++j) EXPECT_LE(s(i, j), s(i, j - 1) + 1e-15);
  }
}

TEST(PopulationMinimizer, NoCensoringGivesSurvival) {
  const std::vector<double> f{0.1, 0.2, 0.05, 0.15, 0.1};
  std::vector<double> s(f.size()), g(f.size(), 1.0);
  double acc = 1.0;
  for (std::size_t j = 0; j < f.size(); ++j) s[j] = (acc -= f[j]);
  const auto pi = bce_population_minimizer(s, g, f);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(pi[j], s[j], 1e-15);
}

TEST(PopulationMinimizer, StepCensoringZeroesAfterCensorTime) {
  const std::vector<double> f{0.1, 0.2, 0.05, 0.15, 0.1};
  std::vector<double> s(f.size());
  double acc = 1.0;
  for (std::size_t j = 0; j < f.size(); ++j) s[j] = (acc -= f[j]);
  const std::vector<double> g{1, 1, 0, 0, 0};  // C* = third grid time
  const auto pi = bce_population_minimizer(s, g, f);
  EXPECT_NEAR(pi[0], s[0], 1e-15);
  EXPECT_NEAR(pi[1], s[1], 1e-15);
  EXPECT_EQ(pi[2], 0.0);
  EXPECT_EQ(pi[4], 0.0);
}

TEST(PopulationMinimizer, NeverAboveSurvival) {
  Rng rng(derive_seed(53, {}));
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> f(5), s(5), g(5);
    double acc = 1.0, gv = 1.0;
    for (std::size_t j = 0; j < 5; ++j) {
      f[j] = acc * uniform(rng, 0.0, 0.4);
      s[j] = (acc -= f[j]);
      g[j] = (gv *= uniform(rng, 0.5, 1.0));
    }
    const auto pi = bce_population_minimizer(s, g, f);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_LE(pi[j], s[j] + 1e-15);
  }
}

TEST(ModelKind, Parse) {
  EXPECT_EQ(parse_model_kind("bce"), ModelKind::bce);
  EXPECT_EQ(parse_model_kind("logistic-hazard"), ModelKind::logistic_hazard);
  EXPECT_THROW(parse_model_kind("cox"), DataError);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(derive_seed(54, {}));
  MlpSpec spec{3, {5, 4}, 0.0, 2};
  Mlp net(spec, rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(3, 6, [&] { return uniform(rng, -1, 1); });
  Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(2, 6, [&] { return uniform(rng, -1, 1); });
  auto loss = [&](const Mlp& m) { return m.forward(x).cwiseProduct(w).sum(); };
  Mlp::Tape tape;
  Rng drop(1);
  net.forward_train(x, drop, tape);
  const auto grads = net.backward(tape, w);
  const double step = 1e-6;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    for (Eigen::Index k = 0; k < net.layers()[l].weight.size(); ++k) {
      Mlp up = net, down = net;
      up.layers()[l].weight.data()[k] += step;
      down.layers()[l].weight.data()[k] -= step;
      const double numeric = (loss(up) - loss(down)) / (2 * step);
      EXPECT_NEAR(grads[l].weight.data()[k], numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
    }
    for (Eigen::Index k = 0; k < net.layers()[l].bias.size(); ++k) {
      Mlp up = net, down = net;
      up.layers()[l].bias(k) += step;
      down.layers()[l].bias(k) -= step;
      const double numeric = (loss(up) - loss(down)) / (2 * step);
      EXPECT_NEAR(grads[l].bias(k), numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
    }
  }
}

TEST(Mlp, InitializationBounds) {
  Rng rng(derive_seed(55, {}));
  Mlp net(MlpSpec{16, {32}, 0.1, 3}, rng);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(net.layers()[1].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(32.0));
  EXPECT_THROW(Mlp(MlpSpec{1, {0}, 0.1, 1}, rng), DataError);
  EXPECT_THROW(Mlp(MlpSpec{1, {4}, 1.0, 1}, rng), DataError);
}

namespace {

struct SmallData {
  ScenarioOutput train, valid;
};

SmallData small_constant_hazard(std::size_t n) {
  ScenarioOptions opt{.expose_censor_time = true, .keep_true_survival = false};
  return {build_scenario(ScenarioKind::constant_hazard, n, 61, opt),
          build_scenario(ScenarioKind::constant_hazard, n / 2, 62, opt)};
}

}  // namespace

TEST(Train, ZeroEpochsReturnsInitialModel) {
  const auto d = small_constant_hazard(400);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto grid = TimeGrid::equidistant(100.0, 10);
  for (auto kind : {ModelKind::logistic_hazard, ModelKind::bce}) {
    const auto t = train(kind, d.train.dataset, d.valid.dataset, grid, MlpSpec{}, cfg);
    ASSERT_EQ(t.report.trajectory.size(), 1u);
    EXPECT_TRUE(std::isfinite(t.report.best_valid_loss));
    EXPECT_EQ(t.report.best_epoch, 0u);
  }
}

TEST(Train, DeterministicForFixedSeed) {
  const auto d = small_constant_hazard(600);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 17;
  const auto grid = TimeGrid::equidistant(100.0, 10);
  const auto a = train(ModelKind::bce, d.train.dataset, d.valid.dataset, grid, MlpSpec{}, cfg);
  const auto b = train(ModelKind::bce, d.train.dataset, d.valid.dataset, grid, MlpSpec{}, cfg);
  EXPECT_EQ(a.model.to_json().dump(), b.model.to_json().dump());
  cfg.seed = 18;
  const auto c = train(ModelKind::bce, d.train.dataset, d.valid.dataset, grid, MlpSpec{}, cfg);
  EXPECT_NE(a.model.to_json().dump(), c.model.to_json().dump());
}

TEST(Train, FeatureSubsetAndCheckpointRoundTrip) {
  const auto d = small_constant_hazard(400);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  const auto grid = TimeGrid::equidistant(100.0, 10);
  const auto t = train(ModelKind::logistic_hazard, d.train.dataset, d.valid.dataset, grid, MlpSpec{}, cfg, {1});
  EXPECT_EQ(t.model.network().spec().input_dim, 1u);
  const auto back = DiscreteTimeModel::from_json(t.model.to_json());
  EXPECT_EQ(back.features(), std::vector<std::size_t>{1});
  EXPECT_EQ(back.predict_survival(d.valid.dataset).values(), t.model.predict_survival(d.valid.dataset).values());
  auto j = t.model.to_json();
  j["format"] = "something-else";
  EXPECT_THROW(DiscreteTimeModel::from_json(j), DataError);
}

TEST(Train, LogisticHazardRecoversConstantHazard) {
  ScenarioOptions opt{.expose_censor_time = false, .keep_true_survival = false};
  const auto tr = build_scenario(ScenarioKind::constant_hazard, 10000, 63, opt);
  const auto va = build_scenario(ScenarioKind::constant_hazard, 4000, 64, opt);
  const auto te = build_scenario(ScenarioKind::constant_hazard, 500, 65, opt);
  const auto grid = TimeGrid::equidistant(100.0, 50);
  const auto t = train(ModelKind::logistic_hazard, tr.dataset, va.dataset, grid, MlpSpec{}, TrainConfig{});
  const auto fine = TimeGrid::equidistant(100.0, 1000);
  const auto s = interpolate_cdi(t.model.predict_survival(te.dataset), fine);
  double mad = 0.0;
  for (std::size_t i = 0; i < s.subjects(); ++i)
    for (std::size_t j = 0; j < fine.size(); ++j)
      mad += std::abs(s(i, j) - std::pow(1.0 - tables_v1::kConstantHazard, static_cast<double>(j + 1)));
  mad /= static_cast<double>(s.subjects() * fine.size());
  EXPECT_LE(mad, 0.03);
}

TEST(Train, RejectsBadConfig) {
  const auto d = small_constant_hazard(100);
  TrainConfig cfg;
  cfg.patience = 0;
  EXPECT_THROW(train(ModelKind::bce, d.train.dataset, d.valid.dataset, TimeGrid({50.0}), MlpSpec{}, cfg), DataError);
}
