// adminbrier: simulate -> train -> evaluate -> report.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
// Every failure prints one line to stderr: error[<usage|data|numeric>]: <reason>

#include "adminbrier/adminbrier.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>

namespace ab = adminbrier;

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

int fail(const char* kind, int code, const std::string& what) {
  std::cerr << "error[" << kind << "]: " << one_line(what) << '\n';
  return code;
}

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::optional<std::size_t> n_train, n_valid, n_test, max_epochs;
  std::optional<bool> expose;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "experiment JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--scenario", o.scenario, "constant-hazard | complicated-censoring | simple-censoring");
  cmd->add_option("--n-train", o.n_train);
  cmd->add_option("--n-valid", o.n_valid);
  cmd->add_option("--n-test", o.n_test);
  cmd->add_option("--max-epochs", o.max_epochs);
  cmd->add_option("--expose-censor-time", o.expose, "append C*/100 as a covariate (constant-hazard only)");
}

ab::ExperimentConfig load_config(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    try {
      j = ab::read_json_file(o.config_path);
    } catch (const ab::DataError& e) {
      throw ab::UsageError(e.what());
    }
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.scenario) j["scenario"] = *o.scenario;
  if (o.n_train) j["n_train"] = *o.n_train;
  if (o.n_valid) j["n_valid"] = *o.n_valid;
  if (o.n_test) j["n_test"] = *o.n_test;
  if (o.expose) j["expose_censor_time"] = *o.expose;
  if (o.max_epochs) j["training"]["max_epochs"] = *o.max_epochs;
  return ab::ExperimentConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brier-score experiments under administrative censoring"};
  app.require_subcommand(1);

  Overrides o;
  std::string out, data, models;
  std::vector<std::string> score_files;

  auto* sim = app.add_subcommand("simulate", "write train/valid/test datasets and ground truth");
  add_config_options(sim, o);
  sim->add_option("--out", out, "output directory")->required();

  auto* trn = app.add_subcommand("train", "fit event models and censoring estimators");
  add_config_options(trn, o);
  trn->add_option("--data", data, "directory written by simulate")->required();
  trn->add_option("--out", out, "checkpoint directory")->required();

  auto* ev = app.add_subcommand("evaluate", "score models on the test split");
  add_config_options(ev, o);
  ev->add_option("--data", data, "directory written by simulate")->required();
  ev->add_option("--models", models, "directory written by train")->required();
  ev->add_option("--out", out, "score directory")->required();

  auto* rep = app.add_subcommand("report", "merge score curves into one long CSV");
  rep->add_option("files", score_files, "score curve CSVs named <model>__<metric>__<cap>.csv");
  rep->add_option("--out", out, "merged CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", 1, e.what());
  }

  try {
    if (*sim) {
      const auto cfg = load_config(o);
      const auto s = ab::cmd_simulate(cfg, out);
      for (const auto& [split, frac] : s.censored_fraction)
        std::cout << split << ": " << s.rows.at(split) << " rows, censored fraction " << ab::format_double(frac) << '\n';
    } else if (*trn) {
      const auto cfg = load_config(o);
      const auto s = ab::cmd_train(cfg, data, out);
      for (const auto& [name, r] : s.reports)
        std::cout << name << ": best epoch " << r.best_epoch << ", validation loss " << ab::format_double(r.best_valid_loss)
                  << '\n';
    } else if (*ev) {
      const auto cfg = load_config(o);
      const auto s = ab::cmd_evaluate(cfg, data, models, out);
      std::cout << s.files.size() << " score files written to " << out << '\n';
    } else if (*rep) {
      std::vector<std::filesystem::path> paths(score_files.begin(), score_files.end());
      const auto rows = ab::cmd_report(paths, out);
      std::cout << rows << " rows written to " << out << '\n';
    }
  } catch (const ab::UsageError& e) {
    return fail("usage", 1, e.what());
  } catch (const ab::DataError& e) {
    return fail("data", 2, e.what());
  } catch (const ab::NumericError& e) {
    return fail("numeric", 3, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("data", 2, e.what());
  }
  return 0;
}
