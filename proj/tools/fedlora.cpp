// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: estimate (probe runs -> constants), plan
// (constants -> plan), run (one strategy end to end), sweep (strategy
// comparison table).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedlora/experiment.hpp"
#include "fedlora/report_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string format = "both";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_strategy, bool with_format) {
  cmd->add_option("--config", args->config_path, "JSON config file; defaults used when omitted");
  cmd->add_option("--seed", args->seed, "override the config seed");
  cmd->add_option("--out-dir", args->out_dir, "output directory")->capture_default_str();
  if (with_strategy) {
    cmd->add_option("--strategy", args->strategy,
                    "sampling[:rank], e.g. optimized, fixed:normal-rank");
  }
  if (with_format) {
    cmd->add_option("--format", args->format, "csv|json|both")->capture_default_str();
  }
}

fedlora::ExperimentConfig make_config(const CommonArgs& args) {
  fedlora::ExperimentConfig config;
  if (!args.config_path.empty()) config = fedlora::load_config(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.strategy) config.strategy = fedlora::parse_strategy(*args.strategy);
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fedlora::IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out.flush()) throw fedlora::IoError("failed writing " + path.string());
}

json estimation_json(const fedlora::EstimationResult& estimation) {
  json probes = json::array();
  for (const fedlora::ProbeRun& probe : estimation.probes) {
    probes.push_back({{"q", probe.spec.prob},
                      {"k", probe.spec.ratio},
                      {"rounds", probe.rounds},
                      {"y", probe.y},
                      {"z", probe.z}});
  }
  return {{"constants",
           {{"A", estimation.constants.A},
            {"B", estimation.constants.B},
            {"C", estimation.constants.C},
            {"D", estimation.constants.D}}},
          {"reference_loss", estimation.reference_loss},
          {"elapsed_s", estimation.elapsed},
          {"probes", std::move(probes)}};
}

fedlora::ConvergenceConstants load_constants(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fedlora::IoError("cannot open constants file " + path.string());
  json doc;
  in >> doc;
  const json& c = doc.contains("constants") ? doc.at("constants") : doc;
  fedlora::ConvergenceConstants constants{c.at("A").get<double>(), c.at("B").get<double>(),
                                          c.at("C").get<double>(), c.at("D").get<double>()};
  constants.validate();
  return constants;
}

int cmd_run(const CommonArgs& args) {
  const fedlora::ExperimentConfig config = make_config(args);
  const fedlora::RunReport report = fedlora::run_experiment(config);
  fedlora::emit_report(report, args.out_dir, fedlora::parse_format(args.format));
  std::cout << report.strategy << ": " << report.records.size() << " rounds, ";
  if (report.wall_clock_to_target) {
    std::cout << "reached target at " << fedlora::format_double(*report.wall_clock_to_target)
              << " s\n";
  } else {
    std::cout << "target unreached\n";
  }
  return 0;
}

int cmd_estimate(const CommonArgs& args) {
  const fedlora::ExperimentConfig config = make_config(args);
  const fedlora::ExperimentWorld world = fedlora::build_world(config);
  const fedlora::EstimationResult estimation = fedlora::run_estimation(world, config);
  write_text(fs::path(args.out_dir) / "constants.json",
             estimation_json(estimation).dump(2) + "\n");
  std::cout << "constants: A=" << estimation.constants.A << " B=" << estimation.constants.B
            << " C=" << estimation.constants.C << " D=" << estimation.constants.D << "\n";
  return 0;
}

int cmd_plan(const CommonArgs& args, const std::string& constants_path) {
  const fedlora::ExperimentConfig config = make_config(args);
  const fedlora::ExperimentWorld world = fedlora::build_world(config);

  fedlora::ConvergenceConstants constants;
  if (!constants_path.empty()) {
    constants = load_constants(constants_path);
  } else {
    constants = fedlora::run_estimation(world, config).constants;
  }

  const fedlora::AlternationResult result =
      fedlora::alternate(world.profiles, constants, config.total_bandwidth, config.rank,
                         config.planner.grid_step, config.planner.max_outer_iters);

  json plan{{"sampling_probs", json::array()},
            {"sketch_ratios", json::array()},
            {"rank", result.plan.rank()},
            {"objective", result.objective},
            {"estimated_rounds",
             fedlora::rounds_estimate(result.plan, fedlora::profile_weights(world.profiles),
                                      constants)},
            {"expected_round_time_bound",
             fedlora::expected_round_time_bound(result.plan, world.profiles,
                                                config.total_bandwidth)}};
  for (int n = 0; n < result.plan.clients(); ++n) {
    plan["sampling_probs"].push_back(result.plan.sampling_probs()[n]);
    plan["sketch_ratios"].push_back(result.plan.sketch_ratios()[n]);
  }
  write_text(fs::path(args.out_dir) / "plan.json", plan.dump(2) + "\n");
  std::cout << "plan objective " << result.objective << " after " << result.iterations
            << " iterations\n";
  return 0;
}

std::string dir_label(const std::string& strategy_label) {
  std::string out = strategy_label;
  std::replace(out.begin(), out.end(), ':', '_');
  return out;
}

int cmd_sweep(const CommonArgs& args) {
  const fedlora::ExperimentConfig base = make_config(args);
  const std::vector<std::string> suite = {
      "optimized:optimized-k", "full:full-rank",         "fixed:full-rank",
      "uniform:full-rank",     "weighted:full-rank",     "fixed:normal-rank",
      "fixed:uniform-rank"};

  std::vector<fedlora::RunReport> reports;
  for (const std::string& label : suite) {
    fedlora::ExperimentConfig config = base;
    config.strategy = fedlora::parse_strategy(label);
    fedlora::RunReport report = fedlora::run_experiment(config);
    fedlora::emit_report(report, fs::path(args.out_dir) / dir_label(report.strategy),
                         fedlora::parse_format(args.format));
    std::cout << report.strategy << ": ";
    if (report.wall_clock_to_target) {
      std::cout << fedlora::format_double(*report.wall_clock_to_target) << " s\n";
    } else {
      std::cout << "unreached\n";
    }
    reports.push_back(std::move(report));
  }
  write_text(fs::path(args.out_dir) / "sweep.csv", fedlora::sweep_csv(reports));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated LoRA wireless simulator and plan optimizer"};
  app.require_subcommand(1);

  CommonArgs run_args, estimate_args, plan_args, sweep_args;
  std::string constants_path;

  CLI::App* run_cmd = app.add_subcommand("run", "run one strategy end to end");
  add_common(run_cmd, &run_args, true, true);
  CLI::App* estimate_cmd =
      app.add_subcommand("estimate", "run the probe phase and write constants.json");
  add_common(estimate_cmd, &estimate_args, false, false);
  CLI::App* plan_cmd = app.add_subcommand("plan", "optimize a plan and write plan.json");
  add_common(plan_cmd, &plan_args, false, false);
  plan_cmd->add_option("--constants", constants_path,
                       "constants.json from `estimate`; probes run here when omitted");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "compare all strategies on one scenario");
  add_common(sweep_cmd, &sweep_args, false, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (estimate_cmd->parsed()) return cmd_estimate(estimate_args);
    if (plan_cmd->parsed()) return cmd_plan(plan_args, constants_path);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
