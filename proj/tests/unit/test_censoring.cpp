#include "adminbrier/censoring.hpp"
#include "adminbrier/simgen.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace adminbrier;

namespace {

double sup_distance_to_linear(const StepSurvival& f, double hi) {
  // The sup over [0, hi] of |f - (1 - t/hi)| is attained at a jump, from one side.
  double d = 0.0;
  for (double t : f.jump_times()) {
    const double truth = std::max(0.0, 1.0 - t / hi);
    d = std::max({d, std::abs(f.at(t) - truth), std::abs(f.left_limit(t) - truth)});
  }
  return d;
}

}  // namespace

TEST(KaplanMeier, AllCensoredIsConstantOne) {
  const std::vector<double> t{1, 2, 3};
  const std::vector<int> e{0, 0, 0};
  const auto f = kaplan_meier(t, e);
  EXPECT_TRUE(f.jump_times().empty());
  EXPECT_EQ(f.at(10.0), 1.0);
}

TEST(KaplanMeier, HandProductLimit) {
  const std::vector<double> t{1, 2, 3};
  const std::vector<int> e{1, 1, 0};
  const auto f = kaplan_meier(t, e);
  EXPECT_NEAR(f.at(1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.at(2), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(f.at(3), 1.0 / 3.0, 1e-15);
}

TEST(KaplanMeier, SingleEvent) {
  const std::vector<double> t{5};
  const std::vector<int> e{1};
  const auto f = kaplan_meier(t, e);
  EXPECT_EQ(f.at(4.9), 1.0);
  EXPECT_EQ(f.at(5.0), 0.0);
}

TEST(KaplanMeier, ErrorsAndSupport) {
  EXPECT_THROW(kaplan_meier(std::vector<double>{}, std::vector<int>{}), DataError);
  EXPECT_THROW(kaplan_meier(std::vector<double>{1.0}, std::vector<int>{1, 0}), DataError);
  EXPECT_THROW(kaplan_meier(std::vector<double>{-1.0}, std::vector<int>{1}), DataError);
  EXPECT_EQ(kaplan_meier(std::vector<double>{1.0, 7.0}, std::vector<int>{1, 0}).support_end(), 7.0);
}

TEST(KaplanMeier, NoCensoringGivesEmpiricalSurvival) {
  Rng rng(derive_seed(31, {}));
  std::vector<double> t(500);
  for (double& x : t) x = std::round(uniform(rng, 0.0, 50.0));  // plenty of ties
  const std::vector<int> e(t.size(), 1);
  const auto f = kaplan_meier(t, e);
  for (double s = 0.0; s <= 51.0; s += 0.5) {
    const double edf = static_cast<double>(std::count_if(t.begin(), t.end(), [&](double x) { return x <= s; })) / t.size();
    EXPECT_NEAR(f.at(s), 1.0 - edf, 1e-12);
  }
}

TEST(ReverseKaplanMeier, EventsLeaveRiskSetFirstAtTies) {
  // At time 2 one event and one censoring tie. The event leaves first, so the
  // censoring sees a risk set of 2 ({2 censored, 4}); G(2) = 1 - 1/2.
  const std::vector<double> t{1, 2, 2, 4};
  const std::vector<int> d{1, 1, 0, 1};
  const auto g = reverse_kaplan_meier(t, d);
  EXPECT_EQ(g.at(1.5), 1.0);
  EXPECT_NEAR(g.at(2.0), 0.5, 1e-15);
  EXPECT_NEAR(g.at(10.0), 0.5, 1e-15);
}

TEST(ReverseKaplanMeier, UniformCensoringMatchesLinearTruth) {
  Rng rng(derive_seed(32, {}));
  std::vector<double> t(10000);
  for (double& x : t) x = uniform(rng, 0.0, 100.0);
  const std::vector<int> d(t.size(), 0);
  EXPECT_LE(sup_distance_to_linear(reverse_kaplan_meier(t, d), 100.0), 0.03);
}

TEST(AdminStep, Examples) {
  const auto g = admin_step_censor(10.0);
  EXPECT_EQ(eval_right(g, 9.9), 1.0);
  EXPECT_EQ(eval_right(g, 10.0), 0.0);
  EXPECT_EQ(eval_left(g, 10.0), 1.0);
  EXPECT_THROW(admin_step_censor(-1.0), DataError);
  for (double c : {0.5, 3.0, 7.25})
    for (double t : {0.25, 0.5, 3.0, 5.0, 7.25, 9.0}) {
      EXPECT_EQ(eval_right(admin_step_censor(c), t), c > t ? 1.0 : 0.0);
      EXPECT_EQ(eval_left(admin_step_censor(c), t), c >= t ? 1.0 : 0.0);
    }
}

TEST(CensorModel, JsonRoundTrip) {
  const std::vector<double> t{1, 2, 3, 5};
  const std::vector<int> d{0, 1, 0, 1};
  const auto km = CensorModel::from_kaplan_meier(reverse_kaplan_meier(t, d));
  const auto back = CensorModel::from_json(km.to_json());
  ASSERT_NE(back.kaplan_meier_curve(), nullptr);
  for (double s : {0.5, 1.0, 2.5, 3.0, 9.0}) EXPECT_EQ(back.kaplan_meier_curve()->at(s), km.kaplan_meier_curve()->at(s));
  EXPECT_EQ(CensorModel::from_json(CensorModel::admin_step().to_json()).kind(), CensorModel::Kind::admin_step);
  EXPECT_THROW(CensorModel::from_json({{"format", "other"}}), DataError);
}

namespace {

TrainConfig quick_config() {
  TrainConfig c;
  c.max_epochs = 60;
  c.patience = 8;
  c.learning_rate = 2e-3;
  c.seed = 9;
  return c;
}

}  // namespace

TEST(FitCensorModel, CovariateFreeCensoringTracksReverseKaplanMeier) {
  const auto tr = build_scenario(ScenarioKind::constant_hazard, 6000, 41, {.keep_true_survival = false});
  const auto va = build_scenario(ScenarioKind::constant_hazard, 2000, 42, {.keep_true_survival = false});
  const auto grid = TimeGrid::equidistant(100.0, 50);
  MlpSpec spec;
  auto [model, report] = fit_censor_logistic_hazard(tr.dataset, va.dataset, grid, spec, quick_config());
  const auto km = reverse_kaplan_meier(tr.dataset);
  const auto curves = model.curves_for(tr.dataset);
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) worst = std::max(worst, std::abs(curves[i].at(grid[j]) - km.at(grid[j])));
  EXPECT_LE(worst, 0.05);
}

TEST(FitCensorModel, NoCensoringGivesOne) {
  std::vector<SubjectRecord> recs;
  Rng rng(derive_seed(43, {}));
  for (int i = 0; i < 1500; ++i) recs.push_back({uniform(rng, 0.1, 100.0), true, std::nullopt, {uniform(rng, -1, 1)}});
  const RightCensoredDataset tr(std::vector<SubjectRecord>(recs.begin(), recs.begin() + 1000), 1);
  const RightCensoredDataset va(std::vector<SubjectRecord>(recs.begin() + 1000, recs.end()), 1);
  const auto grid = TimeGrid::equidistant(100.0, 20);
  auto [model, report] = fit_censor_logistic_hazard(tr, va, grid, MlpSpec{}, quick_config());
  for (const auto& c : model.curves_for(va))
    for (double t : grid.times()) ASSERT_GE(c.at(t), 0.98);
}

TEST(FitCensorModel, LearnsCovariateStep) {
  ScenarioOptions opt{.expose_censor_time = false, .keep_true_survival = false};
  const auto tr = build_scenario(ScenarioKind::simple_censoring, 6000, 44, opt);
  const auto va = build_scenario(ScenarioKind::simple_censoring, 2000, 45, opt);
  const auto te = build_scenario(ScenarioKind::simple_censoring, 1000, 46, opt);
  const auto grid = TimeGrid::equidistant(100.0, 50);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 120;
  cfg.patience = 15;
  auto [model, report] = fit_censor_logistic_hazard(tr.dataset, va.dataset, grid, MlpSpec{}, cfg);
  const auto curves = model.curves_for(te.dataset);
  std::size_t learned = 0, eligible = 0;
  for (std::size_t i = 0; i < te.dataset.size(); ++i) {
    const double c = te.c_star[i];
    if (c - 5 < 0 || c + 5 > 100) continue;
    ++eligible;
    if (curves[i].at(c - 5) - curves[i].at(c + 5) > 0.5) ++learned;
  }
  ASSERT_GT(eligible, 0u);
  EXPECT_GE(static_cast<double>(learned) / eligible, 0.5);
}

TEST(SwapEvents, FlipsIndicators) {
  const RightCensoredDataset d({{1, true, 3.0, {0.0}}, {3, false, 3.0, {1.0}}}, 1);
  const auto s = swap_events(d);
  EXPECT_FALSE(s[0].event);
  EXPECT_TRUE(s[1].event);
  EXPECT_FALSE(s.admin_complete());
}
