// SPDX-License-Identifier: Apache-2.0
#include "fedlora/report_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fedlora {

using nlohmann::json;

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  if (name == "both") return ReportFormat::kBoth;
  throw ConfigError("unknown format '" + name + "'; expected csv|json|both");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string report_csv(const RunReport& report) {
  std::ostringstream out;
  out << "round,participants,round_time_s,cumulative_time_s,loss,accuracy\n";
  for (const RoundRecord& r : report.records) {
    out << r.round << ',';
    for (std::size_t i = 0; i < r.participants.size(); ++i) {
      if (i > 0) out << ';';
      out << r.participants[i];
    }
    out << ',' << format_double(r.round_time) << ',' << format_double(r.cumulative_time) << ','
        << format_double(r.global_loss) << ','
        << format_double(r.eval_metrics.at("accuracy")) << '\n';
  }
  return out.str();
}

json report_json(const RunReport& report) {
  json plan{{"sampling_probs", json::array()},
            {"sketch_ratios", json::array()},
            {"rank", report.plan.rank()}};
  for (int n = 0; n < report.plan.clients(); ++n) {
    plan["sampling_probs"].push_back(report.plan.sampling_probs()[n]);
    plan["sketch_ratios"].push_back(report.plan.sketch_ratios()[n]);
  }

  json constants;
  if (report.constants) {
    constants = {{"A", report.constants->A},
                 {"B", report.constants->B},
                 {"C", report.constants->C},
                 {"D", report.constants->D}};
  }

  json records = json::array();
  for (const RoundRecord& r : report.records) {
    json eval = json::object();
    for (const auto& [key, value] : r.eval_metrics) eval[key] = value;
    records.push_back({{"round", r.round},
                       {"participants", r.participants},
                       {"round_time_s", r.round_time},
                       {"cumulative_time_s", r.cumulative_time},
                       {"loss", r.global_loss},
                       {"eval", std::move(eval)}});
  }

  json wall_clock;
  if (report.wall_clock_to_target) wall_clock = *report.wall_clock_to_target;

  return {{"strategy", report.strategy}, {"seed", report.seed},
          {"plan", std::move(plan)},     {"constants", std::move(constants)},
          {"wall_clock_to_target", std::move(wall_clock)}, {"records", std::move(records)}};
}

RunReport parse_report(const json& summary) {
  const json& plan_doc = summary.at("plan");
  const auto probs_list = plan_doc.at("sampling_probs").get<std::vector<double>>();
  const auto ratios_list = plan_doc.at("sketch_ratios").get<std::vector<int>>();
  Eigen::VectorXd probs = Eigen::Map<const Eigen::VectorXd>(
      probs_list.data(), static_cast<Eigen::Index>(probs_list.size()));
  Eigen::VectorXi ratios = Eigen::Map<const Eigen::VectorXi>(
      ratios_list.data(), static_cast<Eigen::Index>(ratios_list.size()));
  Plan plan(std::move(probs), std::move(ratios), plan_doc.at("rank").get<int>());

  std::optional<ConvergenceConstants> constants;
  if (!summary.at("constants").is_null()) {
    const json& c = summary.at("constants");
    constants = ConvergenceConstants{c.at("A").get<double>(), c.at("B").get<double>(),
                                     c.at("C").get<double>(), c.at("D").get<double>()};
  }

  std::optional<double> wall_clock;
  if (!summary.at("wall_clock_to_target").is_null()) {
    wall_clock = summary.at("wall_clock_to_target").get<double>();
  }

  std::vector<RoundRecord> records;
  for (const json& r : summary.at("records")) {
    RoundRecord record;
    record.round = r.at("round").get<int>();
    record.participants = r.at("participants").get<std::vector<int>>();
    record.round_time = r.at("round_time_s").get<double>();
    record.cumulative_time = r.at("cumulative_time_s").get<double>();
    record.global_loss = r.at("loss").get<double>();
    for (const auto& [key, value] : r.at("eval").items()) {
      record.eval_metrics[key] = value.get<double>();
    }
    records.push_back(std::move(record));
  }

  return {summary.at("strategy").get<std::string>(), summary.at("seed").get<std::uint64_t>(),
          std::move(plan), constants, wall_clock, std::move(records)};
}

std::string sweep_csv(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  out << "strategy,wall_clock_to_target_s,rounds,final_loss,final_accuracy\n";
  for (const RunReport& report : reports) {
    out << report.strategy << ',';
    if (report.wall_clock_to_target) out << format_double(*report.wall_clock_to_target);
    out << ',' << report.records.size() << ',';
    if (!report.records.empty()) {
      const RoundRecord& last = report.records.back();
      out << format_double(last.global_loss) << ','
          << format_double(last.eval_metrics.at("accuracy"));
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void emit_report(const RunReport& report, const std::filesystem::path& out_dir,
                 ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  if (format == ReportFormat::kCsv || format == ReportFormat::kBoth) {
    write_file(out_dir / "rounds.csv", report_csv(report));
  }
  if (format == ReportFormat::kJson || format == ReportFormat::kBoth) {
    write_file(out_dir / "summary.json", report_json(report).dump(2) + "\n");
  }
}

json config_to_json(const ExperimentConfig& config) {
  json doc{{"seed", config.seed},
           {"clients", config.clients},
           {"rank", config.rank},
           {"local_iters", config.local_iters},
           {"learning_rate", config.learning_rate},
           {"batch_size", config.batch_size},
           {"pretrain_steps", config.pretrain_steps},
           {"pretrain_learning_rate", config.pretrain_learning_rate},
           {"pretrain_batch", config.pretrain_batch},
           {"dirichlet_alpha", config.dirichlet_alpha},
           {"total_bandwidth", config.total_bandwidth},
           {"eval_fraction", config.eval_fraction},
           {"round_cap", config.round_cap},
           {"dataset",
            {{"classes", config.dataset.classes},
             {"features", config.dataset.features},
             {"samples", config.dataset.samples},
             {"center_scale", config.dataset.center_scale},
             {"noise", config.dataset.noise}}},
           {"profile_ranges",
            {{"tau_lo", config.profile_ranges.tau_lo},
             {"tau_hi", config.profile_ranges.tau_hi},
             {"t_lo", config.profile_ranges.t_lo},
             {"t_hi", config.profile_ranges.t_hi}}},
           {"planner",
            {{"warmup_rounds", config.planner.warmup_rounds},
             {"probe_round_cap", config.planner.probe_round_cap},
             {"grid_step", config.planner.grid_step},
             {"max_outer_iters", config.planner.max_outer_iters}}},
           {"strategy",
            {{"sampling", to_string(config.strategy.sampling)},
             {"rank", to_string(config.strategy.rank)},
             {"fixed_prob", config.strategy.fixed_prob},
             {"normal_mean", config.strategy.normal_mean},
             {"normal_stddev", config.strategy.normal_stddev}}}};
  if (config.target_loss) doc["target_loss"] = *config.target_loss;
  if (config.target_accuracy) doc["target_accuracy"] = *config.target_accuracy;
  if (!config.planner.probes.empty()) {
    json probes = json::array();
    for (const ProbeSpec& p : config.planner.probes) {
      probes.push_back({{"q", p.prob}, {"k", p.ratio}});
    }
    doc["planner"]["probes"] = std::move(probes);
  }
  return doc;
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig config;
  try {
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("clients")) config.clients = doc.at("clients").get<int>();
    if (doc.contains("rank")) config.rank = doc.at("rank").get<int>();
    if (doc.contains("local_iters")) config.local_iters = doc.at("local_iters").get<int>();
    if (doc.contains("learning_rate")) {
      config.learning_rate = doc.at("learning_rate").get<double>();
    }
    if (doc.contains("batch_size")) config.batch_size = doc.at("batch_size").get<int>();
    if (doc.contains("pretrain_steps")) {
      config.pretrain_steps = doc.at("pretrain_steps").get<int>();
    }
    if (doc.contains("pretrain_learning_rate")) {
      config.pretrain_learning_rate = doc.at("pretrain_learning_rate").get<double>();
    }
    if (doc.contains("pretrain_batch")) config.pretrain_batch = doc.at("pretrain_batch").get<int>();
    if (doc.contains("dirichlet_alpha")) {
      config.dirichlet_alpha = doc.at("dirichlet_alpha").get<double>();
    }
    if (doc.contains("total_bandwidth")) {
      config.total_bandwidth = doc.at("total_bandwidth").get<double>();
    }
    if (doc.contains("eval_fraction")) config.eval_fraction = doc.at("eval_fraction").get<double>();
    if (doc.contains("round_cap")) config.round_cap = doc.at("round_cap").get<int>();
    if (doc.contains("target_loss")) config.target_loss = doc.at("target_loss").get<double>();
    if (doc.contains("target_accuracy")) {
      config.target_accuracy = doc.at("target_accuracy").get<double>();
      if (!doc.contains("target_loss")) config.target_loss.reset();
    }
    if (doc.contains("dataset")) {
      const json& d = doc.at("dataset");
      if (d.contains("classes")) config.dataset.classes = d.at("classes").get<int>();
      if (d.contains("features")) config.dataset.features = d.at("features").get<int>();
      if (d.contains("samples")) config.dataset.samples = d.at("samples").get<int>();
      if (d.contains("center_scale")) {
        config.dataset.center_scale = d.at("center_scale").get<double>();
      }
      if (d.contains("noise")) config.dataset.noise = d.at("noise").get<double>();
    }
    if (doc.contains("profile_ranges")) {
      const json& p = doc.at("profile_ranges");
      if (p.contains("tau_lo")) config.profile_ranges.tau_lo = p.at("tau_lo").get<double>();
      if (p.contains("tau_hi")) config.profile_ranges.tau_hi = p.at("tau_hi").get<double>();
      if (p.contains("t_lo")) config.profile_ranges.t_lo = p.at("t_lo").get<double>();
      if (p.contains("t_hi")) config.profile_ranges.t_hi = p.at("t_hi").get<double>();
    }
    if (doc.contains("planner")) {
      const json& p = doc.at("planner");
      if (p.contains("warmup_rounds")) {
        config.planner.warmup_rounds = p.at("warmup_rounds").get<int>();
      }
      if (p.contains("probe_round_cap")) {
        config.planner.probe_round_cap = p.at("probe_round_cap").get<int>();
      }
      if (p.contains("grid_step")) config.planner.grid_step = p.at("grid_step").get<double>();
      if (p.contains("max_outer_iters")) {
        config.planner.max_outer_iters = p.at("max_outer_iters").get<int>();
      }
      if (p.contains("probes")) {
        for (const json& probe : p.at("probes")) {
          config.planner.probes.push_back(
              {probe.at("q").get<double>(), probe.at("k").get<int>()});
        }
      }
    }
    if (doc.contains("strategy")) {
      const json& s = doc.at("strategy");
      if (s.is_string()) {
        config.strategy = parse_strategy(s.get<std::string>());
      } else {
        if (s.contains("sampling")) {
          config.strategy.sampling = parse_sampling_strategy(s.at("sampling").get<std::string>());
        }
        if (s.contains("rank")) {
          config.strategy.rank = parse_rank_strategy(s.at("rank").get<std::string>());
        }
        if (s.contains("fixed_prob")) {
          config.strategy.fixed_prob = s.at("fixed_prob").get<double>();
        }
        if (s.contains("normal_mean")) {
          config.strategy.normal_mean = s.at("normal_mean").get<double>();
        }
        if (s.contains("normal_stddev")) {
          config.strategy.normal_stddev = s.at("normal_stddev").get<double>();
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace fedlora
