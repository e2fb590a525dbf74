#include "adminbrier/bench.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace adminbrier;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(ADMINBRIER_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

ExperimentConfig small_config(ScenarioKind kind = ScenarioKind::constant_hazard) {
  ExperimentConfig c;
  c.scenario = kind;
  c.n_train = 600;
  c.n_valid = 300;
  c.n_test = 800;
  c.seed = 1;
  c.model_grid_size = 20;
  c.network.hidden = {8, 8};
  c.training.max_epochs = 3;
  return c;
}

struct CliResult {
  int status;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(ADMINBRIER_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = ExperimentConfig::from_json(nlohmann::json::object());
  EXPECT_EQ(c.window(), (std::pair{50.0, 100.0}));
  EXPECT_EQ(c.model_grid_size, 50u);
  EXPECT_FALSE(c.metrics.empty());
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json().dump(), c.to_json().dump());
}

TEST(Config, Invalid) {
  EXPECT_THROW(ExperimentConfig::from_json({{"n_train", 0}}), UsageError);
  EXPECT_THROW(ExperimentConfig::from_json({{"metrics", nlohmann::json::array()}}), UsageError);
  EXPECT_THROW(ExperimentConfig::from_json({{"metrics", {{{"metric", "ipcw"}, {"cap", 0.5}}}}}), UsageError);
  EXPECT_THROW(ExperimentConfig::from_json({{"scenario", "kkbox"}}), UsageError);
  EXPECT_THROW(ExperimentConfig::from_json({{"n_train", "many"}}), UsageError);
  EXPECT_THROW(ExperimentConfig::from_json({{"event_models", {{{"name", "a__b"}, {"kind", "bce"}}}}}), UsageError);
}

TEST(Simulate, WritesSplitsAndIsByteIdentical) {
  const auto dir = scratch("simulate");
  const auto c = small_config();
  const auto s = cmd_simulate(c, dir / "a");
  cmd_simulate(c, dir / "b");
  for (const char* split : kSplits) {
    for (const char* f : {"data.csv", "truth.csv"}) {
      ASSERT_TRUE(fs::exists(dir / "a" / split / f));
      EXPECT_EQ(slurp(dir / "a" / split / f), slurp(dir / "b" / split / f));
    }
    EXPECT_EQ(line_count(dir / "a" / split / "data.csv"), s.rows.at(split) + 1);
    EXPECT_EQ(line_count(dir / "a" / split / "truth.csv"), s.rows.at(split) + 1);
  }
  EXPECT_EQ(s.rows.at("train"), 600u);
  EXPECT_EQ(s.rows.at("test"), 800u);
  EXPECT_TRUE(fs::exists(dir / "a" / "test" / "S.csv"));
  EXPECT_FALSE(fs::exists(dir / "a" / "train" / "S.csv"));
}

TEST(Simulate, ComplicatedHas36CovariateColumns) {
  const auto dir = scratch("simulate36");
  auto c = small_config(ScenarioKind::complicated_censoring);
  c.truth_matrix_splits.clear();
  cmd_simulate(c, dir);
  std::ifstream in(dir / "test" / "data.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 3 + 36 - 1);
  EXPECT_NE(header.find(",x35"), std::string::npos);
}

TEST(Pipeline, TrainEvaluateReport) {
  const auto dir = scratch("pipeline");
  auto c = small_config();
  c.metrics.push_back({MetricEntry::Kind::ipcw, MetricEntry::Censor::true_step, WeightCap::at(1.0), false});
  cmd_simulate(c, dir / "data");
  const auto tr = cmd_train(c, dir / "data", dir / "models");
  for (const auto& m : c.event_models) {
    EXPECT_TRUE(fs::exists(dir / "models" / (m.name + ".json")));
    EXPECT_TRUE(fs::exists(dir / "models" / ("trajectory_" + m.name + ".csv")));
    EXPECT_EQ(line_count(dir / "models" / ("trajectory_" + m.name + ".csv")), tr.reports.at(m.name).trajectory.size() + 1);
  }
  EXPECT_TRUE(fs::exists(dir / "models" / "censor_kaplan_meier.json"));
  EXPECT_TRUE(fs::exists(dir / "models" / "censor_logistic_hazard.json"));

  const auto ev = cmd_evaluate(c, dir / "data", dir / "models", dir / "scores");
  EXPECT_EQ(ev.files.size(), (c.event_models.size() + 1) * c.metrics.size());
  EXPECT_TRUE(fs::exists(dir / "scores" / "summary.json"));
  const auto km = dir / "scores" / "bce__ipcw-km__none.csv";
  const auto truth = dir / "scores" / "bce__ipcw-true__none.csv";
  ASSERT_TRUE(fs::exists(km));
  ASSERT_TRUE(fs::exists(truth));
  EXPECT_NE(slurp(km), slurp(truth));

  // A perfect predictor on the uncensored metric is close to the irreducible term.
  const auto s = read_prediction_csv(dir / "data" / "test" / "S.csv");
  const auto oracle = expected_brier_oracle(s, s);
  const auto perfect = read_score_curve_csv(dir / "scores" / (std::string(kTrueSurvivalModel) + "__uncensored__none.csv"));
  for (std::size_t j : {249u, 499u, 749u}) EXPECT_NEAR(*perfect.score[j], *oracle.score[j], 0.03);

  // Cap 1, divide-by-n with step weights equals the removal score.
  const auto test = read_dataset_csv(dir / "data" / "test" / "data.csv");
  const auto model = DiscreteTimeModel::from_json(read_json_file(dir / "models" / "bce.json"));
  const auto pred = interpolate_cdi(model.predict_survival(test), c.eval_grid());
  const auto capped = read_score_curve_csv(dir / "scores" / "bce__ipcw-true-divn__1.csv");
  for (std::size_t j = 0; j < pred.grid().size(); j += 50) {
    const double t = pred.grid()[j];
    double direct = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test[i].duration <= t && test[i].event) direct += pred(i, j) * pred(i, j);
      if (test[i].duration > t) direct += (1 - pred(i, j)) * (1 - pred(i, j));
    }
    EXPECT_NEAR(*capped.score[j], direct / test.size(), 1e-12);
  }

  const std::vector<fs::path> two{km, dir / "scores" / "logistic-hazard__admin__none.csv"};
  const auto rows = cmd_report(two, dir / "report.csv");
  EXPECT_EQ(rows, 2 * c.eval_grid_size);
  EXPECT_EQ(line_count(dir / "report.csv"), rows + 1);
  const auto merged = slurp(dir / "report.csv");
  EXPECT_NE(merged.find(",bce,ipcw-km,none,"), std::string::npos);
  EXPECT_NE(merged.find(",logistic-hazard,admin,none,"), std::string::npos);
}

TEST(Report, Errors) {
  const auto dir = scratch("report");
  EXPECT_THROW(cmd_report({}, dir / "out.csv"), UsageError);
  ScoreCurve a(TimeGrid({1.0, 2.0})), b(TimeGrid({1.0, 3.0}));
  write_score_curve_csv(dir / "m__admin__none.csv", a);
  write_score_curve_csv(dir / "n__admin__none.csv", b);
  const std::vector<fs::path> mixed{dir / "m__admin__none.csv", dir / "n__admin__none.csv"};
  EXPECT_THROW(cmd_report(mixed, dir / "out.csv"), DataError);
  write_score_curve_csv(dir / "badname.csv", a);
  const std::vector<fs::path> bad{dir / "badname.csv"};
  EXPECT_THROW(cmd_report(bad, dir / "out.csv"), DataError);
}

TEST(Cli, ExitCodesAndMessages) {
  const auto dir = scratch("cli");
  auto r = run_cli("", dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error[usage]: ", 0), 0u) << r.err;

  r = run_cli("train --data " + (dir / "missing").string() + " --out " + (dir / "m").string(), dir);
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.err.rfind("error[data]: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  r = run_cli("report --out " + (dir / "r.csv").string(), dir);
  EXPECT_EQ(r.status, 1);

  r = run_cli("simulate --seed 3 --n-train 0 --out " + (dir / "s").string(), dir);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error[usage]: ", 0), 0u) << r.err;

  r = run_cli("simulate --scenario constant-hazard --n-train 200 --n-valid 100 --n-test 100 --out " + (dir / "s").string(), dir);
  EXPECT_EQ(r.status, 0) << r.err;

  std::ofstream(dir / "diverge.json") << R"({"training": {"learning_rate": 1e300, "max_epochs": 3}, "network": {"hidden": [4]}})";
  r = run_cli("train --config " + (dir / "diverge.json").string() + " --data " + (dir / "s").string() + " --out " +
                  (dir / "m").string(),
              dir);
  EXPECT_EQ(r.status, 3) << r.err;
  EXPECT_EQ(r.err.rfind("error[numeric]: ", 0), 0u) << r.err;
}

TEST(Config, PresetsParse) {
  std::size_t seen = 0;
  for (const auto& e : fs::directory_iterator(ADMINBRIER_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    const auto c = ExperimentConfig::from_json(read_json_file(e.path()));
    EXPECT_FALSE(c.event_models.empty()) << e.path();
    ++seen;
  }
  EXPECT_EQ(seen, 3u);
}
