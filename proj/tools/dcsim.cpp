#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dcsim/dcsim.hpp"

namespace fs = std::filesystem;
using namespace dcsim;

namespace {

struct Common {
  std::string config_path;
  std::string preset = "table2-desk";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  std::optional<int> workers;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--preset", c.preset, "built-in config when --config is absent")
      ->check(CLI::IsMember(preset_names()));
  sub->add_option("--seed", c.seed, "base random seed");
  sub->add_option("--trials", c.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "output directory (env DCSIM_OUT_DIR)");
  sub->add_option("--workers", c.workers, "worker threads (env DCSIM_WORKERS)")->check(CLI::PositiveNumber);
}

Config load(const Common& c) { return c.config_path.empty() ? load_preset(c.preset) : load_config_file(c.config_path); }

std::string out_dir(const Common& c) {
  std::string d = c.out;
  if (d.empty())
    if (const char* e = std::getenv("DCSIM_OUT_DIR")) d = e;
  if (d.empty()) d = "out";
  fs::create_directories(d);
  return d;
}

int workers(const Common& c) {
  if (c.workers) return *c.workers;
  if (const char* e = std::getenv("DCSIM_WORKERS")) {
    const int w = std::atoi(e);
    if (w > 0) return w;
  }
  return default_workers();
}

std::uint64_t seed_of(const Common& c) { return c.seed.value_or(1); }

void emit(const std::string& path, const CsvTable& t, const RunStamp& s) {
  write_csv_file(path, t, s);
  std::cout << "wrote " << path << " (" << t.rows.size() << " rows)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dcsim: datacenter power-delivery lifecycle simulator"};
  app.require_subcommand(1);

  Common sweep_o, pol_o, fleet_o, pay_o, perf_o, tgen_o, replay_o, cost_o;
  auto* sweep = app.add_subcommand("sweep-single-hall", "single-SKU stranding sweep over deployment power");
  add_common(sweep, sweep_o);
  auto* pol = app.add_subcommand("policy-mc", "placement policy Monte Carlo on one hall");
  add_common(pol, pol_o);
  auto* fleet = app.add_subcommand("run-fleet", "lifecycle fleet simulation");
  add_common(fleet, fleet_o);
  auto* pay = app.add_subcommand("payoff", "pod payoff from a fleet summary and the serving model");
  add_common(pay, pay_o);
  std::string summary_path;
  pay->add_option("--summary", summary_path, "fleet_summary.json (default <out>/fleet_summary.json)");
  auto* perf = app.add_subcommand("perf-grid", "serving throughput grid");
  add_common(perf, perf_o);
  auto* tgen = app.add_subcommand("trace-gen", "write a deployment trace");
  add_common(tgen, tgen_o);
  std::string tgen_scen = "High";
  int tgen_pod = 1;
  tgen->add_option("--scenario", tgen_scen, "GPU TDP scenario")->check(CLI::IsMember({"Low", "Med", "High"}));
  tgen->add_option("--pod-size", tgen_pod, "racks per GPU pod")->check(CLI::PositiveNumber);
  auto* replay = app.add_subcommand("replay", "run every configured design over a saved trace");
  add_common(replay, replay_o);
  std::string trace_path;
  replay->add_option("--trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);
  auto* cost = app.add_subcommand("hall-cost", "hall CapEx and base $/MW per design");
  add_common(cost, cost_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      Config cfg = load(sweep_o);
      if (sweep_o.trials) cfg.sweep.trials = *sweep_o.trials;
      const auto dir = out_dir(sweep_o);
      const auto pts = sweep_single_hall(cfg, seed_of(sweep_o), workers(sweep_o));
      emit(dir + "/sweep.csv", sweep_table(pts), {"sweep-single-hall", config_digest(cfg), seed_of(sweep_o)});
    } else if (pol->parsed()) {
      Config cfg = load(pol_o);
      if (pol_o.trials) cfg.policy_mc.trials = *pol_o.trials;
      const auto dir = out_dir(pol_o);
      const auto res = policy_mc(cfg, seed_of(pol_o), workers(pol_o));
      const RunStamp st{"policy-mc", config_digest(cfg), seed_of(pol_o)};
      emit(dir + "/policy_mc.csv", policy_trials_table(res), st);
      emit(dir + "/policy_mc_summary.csv", policy_summary_table(res), st);
    } else if (fleet->parsed()) {
      Config cfg = load(fleet_o);
      if (fleet_o.seed) cfg.fleet.seeds = {*fleet_o.seed};
      const auto dir = out_dir(fleet_o);
      const auto runs = run_fleet(cfg, workers(fleet_o));
      const RunStamp st{"run-fleet", config_digest(cfg), cfg.fleet.seeds.empty() ? 0 : cfg.fleet.seeds.front()};
      emit(dir + "/fleet.csv", fleet_series_table(runs, cfg.fleet.start_year), st);
      emit(dir + "/fleet_runs.csv", fleet_summary_table(runs), st);
      std::ofstream js(dir + "/fleet_summary.json");
      js << fleet_summary_json(cfg, runs).dump(2) << '\n';
      std::cout << "wrote " << dir << "/fleet_summary.json\n";
    } else if (pay->parsed()) {
      Config cfg = load(pay_o);
      const auto dir = out_dir(pay_o);
      if (summary_path.empty()) summary_path = dir + "/fleet_summary.json";
      std::ifstream in(summary_path);
      if (!in) {
        std::cerr << "error: missing fleet summary " << summary_path << "; run `dcsim run-fleet` first\n";
        return 2;
      }
      json summary;
      try {
        in >> summary;
      } catch (const json::parse_error& e) {
        std::cerr << "error: " << summary_path << ": " << e.what() << '\n';
        return 2;
      }
      const auto rows = pod_payoffs(cfg, cost_records(summary));
      emit(dir + "/payoff.csv", payoff_table(rows), {"payoff", config_digest(cfg), seed_of(pay_o)});
    } else if (perf->parsed()) {
      Config cfg = load(perf_o);
      const auto dir = out_dir(perf_o);
      emit(dir + "/perf_grid.csv", perf_grid(cfg), {"perf-grid", config_digest(cfg), seed_of(perf_o)});
    } else if (tgen->parsed()) {
      Config cfg = load(tgen_o);
      const auto dir = out_dir(tgen_o);
      const Scenario s = parse_scenario(tgen_scen);
      const std::uint64_t seed = seed_of(tgen_o);
      const Trace t = generate_trace(cfg.fleet_trace(s, tgen_pod), seed);
      const std::string path = dir + "/trace_" + tgen_scen + "_pod" + std::to_string(tgen_pod) + "_seed" +
                               std::to_string(seed) + ".jsonl";
      std::ofstream os(path);
      write_trace(os, t, {seed, t.horizon, t.start_year, s, tgen_pod, config_to_json(cfg)});
      std::cout << "wrote " << path << " (" << t.deployments.size() << " deployments, digest " << trace_digest(t)
                << ")\n";
    } else if (replay->parsed()) {
      std::ifstream in(trace_path);
      TraceHeader h;
      const Trace t = read_trace(in, &h);
      const Config cfg = config_from_json(h.config);
      const auto dir = out_dir(replay_o);
      std::vector<FleetRun> runs;
      for (const auto& dn : cfg.fleet.designs) runs.push_back(fleet_run_on_trace(cfg, t, h.scenario, h.pod_size, dn, h.seed));
      const RunStamp st{"replay", config_digest(cfg), h.seed};
      emit(dir + "/replay.csv", fleet_series_table(runs, cfg.fleet.start_year), st);
      emit(dir + "/replay_runs.csv", fleet_summary_table(runs), st);
    } else if (cost->parsed()) {
      Config cfg = load(cost_o);
      const auto dir = out_dir(cost_o);
      const RunStamp st{"hall-cost", config_digest(cfg), seed_of(cost_o)};
      emit(dir + "/hall_cost.csv", hall_cost_table(cfg), st);
      emit(dir + "/hall_cost_components.csv", cost_components_table(cfg), st);
    }
  } catch (const TraceParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
