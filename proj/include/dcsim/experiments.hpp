#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "dcsim/config.hpp"
#include "dcsim/metrics.hpp"
#include "dcsim/parallel.hpp"
#include "dcsim/perfmodel.hpp"
#include "dcsim/simulation.hpp"
#include "dcsim/trace_io.hpp"

namespace dcsim {

// CSV emission.

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template <class... Ts>
  void add(const Ts&... vs) {
    std::vector<std::string> r;
    (r.push_back(cell(vs)), ...);
    if (r.size() != columns.size()) throw std::logic_error("csv row width mismatch");
    rows.push_back(std::move(r));
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(double v) { return fmt_num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(unsigned v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
};

/// Provenance header shared by every emitted CSV.
struct RunStamp {
  std::string command;
  std::string digest;
  std::uint64_t seed = 0;
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_csv(std::ostream& os, const CsvTable& t, const RunStamp& stamp) {
  os << "# dcsim " << stamp.command << " config_digest=" << stamp.digest << " seed=" << stamp.seed << '\n';
  os << "# generated " << utc_timestamp() << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

inline void write_csv_file(const std::string& path, const CsvTable& t, const RunStamp& stamp) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_csv(os, t, stamp);
}

// Single-SKU sweep.

struct SweepPoint {
  std::string design;
  double power_kw = 0.0;
  std::vector<double> stranded;
  double placed_mean = 0.0;
};

/// Stranded fraction of one hall filled with identical single-rack deployments.
inline std::vector<SingleHallResult> single_sku_trials(const HallDesign& design, double power_kw, int trials,
                                                       std::uint64_t seed, Policy policy = Policy::VarianceMin,
                                                       int fail_streak = 100, int workers = 1) {
  const Deployment sku = make_deployment(RackClass::GPU, power_kw);
  SingleHallOptions opt;
  opt.policy = policy;
  opt.harvest = false;
  opt.fail_streak = fail_streak;
  auto gen = [sku] { return [sku](Rng&, std::uint64_t) { return sku; }; };
  return single_hall_mc(design, gen, {sku}, trials, seed, opt, workers);
}

inline std::vector<SweepPoint> sweep_single_hall(const Config& cfg, std::uint64_t seed, int workers = 1) {
  const auto powers = cfg.sweep.powers();
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (std::size_t di = 0; di < cfg.sweep.designs.size(); ++di)
    for (std::size_t pi = 0; pi < powers.size(); ++pi) grid.emplace_back(di, pi);
  return parallel_map(grid.size(), workers, [&](std::size_t i) {
    const auto [di, pi] = grid[i];
    SweepPoint pt;
    pt.design = cfg.sweep.designs[di];
    pt.power_kw = powers[pi];
    const auto res = single_sku_trials(cfg.design(pt.design), pt.power_kw, cfg.sweep.trials,
                                       derive_rng(seed, 11, (di << 20) | pi)(), cfg.sweep.policy,
                                       cfg.sweep.fail_streak);
    for (const auto& r : res) {
      pt.stranded.push_back(r.report.stranded_fraction());
      pt.placed_mean += static_cast<double>(r.placed) / res.size();
    }
    return pt;
  });
}

inline CsvTable sweep_table(const std::vector<SweepPoint>& pts) {
  CsvTable t{{"design", "power_kw", "stranded_mean", "stranded_p50", "stranded_p90", "placed_mean", "trials"}, {}};
  for (const auto& p : pts) {
    double mean = 0.0;
    for (double v : p.stranded) mean += v / p.stranded.size();
    t.add(p.design, p.power_kw, mean, percentile(p.stranded, 0.5), percentile(p.stranded, 0.9), p.placed_mean,
          static_cast<int>(p.stranded.size()));
  }
  return t;
}

// Mixed-arrival policy Monte Carlo.

/// Draws GPU, compute and storage deployments in fixed shares for one year.
struct MixedArrivals {
  int year = 2030;
  GrowthScenario scenario = GrowthScenario::of(Scenario::High);
  std::array<double, 3> mix{0.6, 0.28, 0.12};
  int pod_size = 1;
  TraceConfig trace;

  Deployment operator()(Rng& rng, std::uint64_t) const {
    std::discrete_distribution<int> cls(mix.begin(), mix.end());
    const int c = cls(rng);
    if (c == 0) {
      const double kw = trajectory_by_name(trace.gpu_trajectory).rack_power(year, scenario);
      Deployment d = make_deployment(RackClass::GPU, kw, pod_size, Tier::HA, trace.cooling);
      d.feeds = trace.gpu_feeds;
      return d;
    }
    const RackClass rc = c == 1 ? RackClass::Compute : RackClass::Storage;
    const ClassSettings& cs = c == 1 ? trace.compute : trace.storage;
    std::vector<double> pr;
    for (const auto& x : cs.clusters) pr.push_back(x.probability);
    const std::size_t j = std::discrete_distribution<std::size_t>(pr.begin(), pr.end())(rng);
    const double kw = sku_power(cs.clusters[j], nongpu_power_trajectory(rc, year, trace.nongpu_scenario));
    Deployment d = make_deployment(rc, kw, cs.quantum, Tier::HA, trace.cooling);
    d.feeds = cs.feeds;
    return d;
  }

  std::vector<Deployment> probes() const {
    TraceConfig t = trace;
    t.gpu_scenario = scenario;
    t.pod_size = pod_size;
    t.envelopes.clear();
    for (RackClass c : {RackClass::GPU, RackClass::Compute, RackClass::Storage}) {
      ArrivalEnvelope e;
      e.cls = c;
      t.envelopes.push_back(e);
    }
    return default_probes(t, year);
  }
};

inline MixedArrivals mixed_arrivals(const Config& cfg) {
  MixedArrivals m;
  m.year = cfg.policy_mc.year;
  m.scenario = GrowthScenario::of(cfg.policy_mc.scenario);
  m.mix = cfg.policy_mc.mix;
  m.pod_size = cfg.policy_mc.pod_size;
  m.trace = cfg.trace;
  return m;
}

struct PolicyTrial {
  std::string design;
  Policy policy = Policy::VarianceMin;
  int trial = 0;
  double stranded = 0.0;
  std::size_t placed = 0;
};

/// Every policy sees the same arrival stream in a given trial.
inline std::vector<PolicyTrial> policy_mc(const Config& cfg, std::uint64_t seed, int workers = 1) {
  const MixedArrivals gen = mixed_arrivals(cfg);
  const auto probes = gen.probes();
  std::vector<PolicyTrial> out;
  for (const auto& dn : cfg.policy_mc.designs) {
    for (Policy p : cfg.policy_mc.policies) {
      SingleHallOptions opt;
      opt.policy = p;
      opt.fail_streak = cfg.policy_mc.fail_streak;
      opt.harvest = cfg.policy_mc.harvest;
      const auto res = single_hall_mc(cfg.design(dn), [&] { return gen; }, probes, cfg.policy_mc.trials, seed, opt,
                                      workers);
      for (std::size_t t = 0; t < res.size(); ++t)
        out.push_back({dn, p, static_cast<int>(t), res[t].report.stranded_fraction(), res[t].placed});
    }
  }
  return out;
}

inline CsvTable policy_trials_table(const std::vector<PolicyTrial>& v) {
  CsvTable t{{"design", "policy", "trial", "stranded_fraction", "placed"}, {}};
  for (const auto& x : v) t.add(x.design, to_string(x.policy), x.trial, x.stranded, x.placed);
  return t;
}

inline std::map<std::pair<std::string, Policy>, std::vector<double>> group_policy_trials(
    const std::vector<PolicyTrial>& v) {
  std::map<std::pair<std::string, Policy>, std::vector<double>> g;
  for (const auto& x : v) g[{x.design, x.policy}].push_back(x.stranded);
  return g;
}

inline CsvTable policy_summary_table(const std::vector<PolicyTrial>& v) {
  CsvTable t{{"design", "policy", "trials", "stranded_p10", "stranded_p50", "stranded_p90"}, {}};
  for (const auto& [k, xs] : group_policy_trials(v))
    t.add(k.first, to_string(k.second), static_cast<int>(xs.size()), percentile(xs, 0.1), percentile(xs, 0.5),
          percentile(xs, 0.9));
  return t;
}

// Fleet lifecycle runs.

struct FleetRun {
  Scenario scenario = Scenario::High;
  int pod_size = 1;
  std::uint64_t seed = 1;
  std::string design;
  FleetResult result;
  double base_cost_per_mw = 0.0;
};

inline FleetRun fleet_run_on_trace(const Config& cfg, const Trace& trace, Scenario s, int pod, const std::string& dn,
                                   std::uint64_t seed) {
  const HallDesign& d = cfg.design(dn);
  FleetRun r;
  r.scenario = s;
  r.pod_size = pod;
  r.seed = seed;
  r.design = dn;
  r.result = fleet_sim({d}, trace, cfg.fleet_trace(s, pod), {cfg.fleet.policy, seed}, cfg.cost);
  r.base_cost_per_mw = base_cost_per_mw(d, cfg.cost);
  return r;
}

/// One trace per (scenario, pod size, seed), replayed into every design.
inline std::vector<FleetRun> run_fleet(const Config& cfg, int workers = 1) {
  std::vector<std::tuple<Scenario, int, std::uint64_t>> jobs;
  for (Scenario s : cfg.fleet.scenarios)
    for (int p : cfg.fleet.pod_sizes)
      for (std::uint64_t seed : cfg.fleet.seeds) jobs.emplace_back(s, p, seed);
  auto nested = parallel_map(jobs.size(), workers, [&](std::size_t i) {
    const auto [s, p, seed] = jobs[i];
    const Trace trace = generate_trace(cfg.fleet_trace(s, p), seed);
    std::vector<FleetRun> out;
    for (const auto& dn : cfg.fleet.designs) out.push_back(fleet_run_on_trace(cfg, trace, s, p, dn, seed));
    return out;
  });
  std::vector<FleetRun> runs;
  for (auto& v : nested)
    for (auto& r : v) runs.push_back(std::move(r));
  return runs;
}

inline CsvTable fleet_series_table(const std::vector<FleetRun>& runs, int start_year) {
  CsvTable t{{"scenario", "pod_size", "seed", "design", "month", "year", "deployed_mw", "provisioned_mw",
              "stranded_fraction_p50", "stranded_fraction_p90", "halls_built", "rejected_mw"},
             {}};
  for (const auto& r : runs)
    for (const auto& m : r.result.series)
      t.add(to_string(r.scenario), r.pod_size, r.seed, r.design, m.month, start_year + m.month / 12, m.deployed_mw,
            m.provisioned_mw, m.stranded_p50, m.stranded_p90, m.halls_built, m.rejected_mw);
  return t;
}

inline CsvTable fleet_summary_table(const std::vector<FleetRun>& runs) {
  CsvTable t{{"scenario", "pod_size", "seed", "design", "final_p90", "halls_built", "deployed_mw", "rejected_mw",
              "capex_usd", "base_usd_per_mw", "effective_usd_per_mw"},
             {}};
  for (const auto& r : runs)
    t.add(to_string(r.scenario), r.pod_size, r.seed, r.design, r.result.final_p90, r.result.halls_built,
          r.result.deployed_mw, r.result.rejected_mw, r.result.capex, r.base_cost_per_mw,
          r.result.effective_cost_per_mw());
  return t;
}

/// Machine-readable fleet results; the payoff command reads this back.
inline json fleet_summary_json(const Config& cfg, const std::vector<FleetRun>& runs) {
  json j;
  j["config_digest"] = config_digest(cfg);
  j["config"] = config_to_json(cfg);
  j["runs"] = json::array();
  for (const auto& r : runs)
    j["runs"].push_back({{"scenario", std::string(to_string(r.scenario))},
                         {"pod_size", r.pod_size},
                         {"seed", r.seed},
                         {"design", r.design},
                         {"final_p90", r.result.final_p90},
                         {"halls_built", r.result.halls_built},
                         {"deployed_mw", r.result.deployed_mw},
                         {"rejected_mw", r.result.rejected_mw},
                         {"capex_usd", r.result.capex},
                         {"base_usd_per_mw", r.base_cost_per_mw},
                         {"effective_usd_per_mw", r.result.effective_cost_per_mw()}});
  return j;
}

/// Per-seed median over the given pod sizes, as in the pod-composition bands.
inline std::map<std::uint64_t, double> median_over_pods(const std::vector<FleetRun>& runs, const std::string& design,
                                                        Scenario s, const std::vector<int>& pods,
                                                        double (*metric)(const FleetRun&)) {
  std::map<std::uint64_t, std::vector<double>> by_seed;
  for (const auto& r : runs)
    if (r.design == design && r.scenario == s && std::find(pods.begin(), pods.end(), r.pod_size) != pods.end())
      by_seed[r.seed].push_back(metric(r));
  std::map<std::uint64_t, double> out;
  for (const auto& [seed, v] : by_seed) out[seed] = percentile(v, 0.5);
  return out;
}

// Serving model grid.

inline std::vector<DeploymentArch> resolve_archs(const std::vector<std::string>& names) {
  if (names.empty()) return builtin_archs();
  std::vector<DeploymentArch> out;
  for (const auto& n : names)
    for (const auto& a : builtin_archs())
      if (a.name == n) out.push_back(a);
  return out;
}

inline std::vector<ModelConfig> resolve_models(const std::vector<std::string>& names) {
  if (names.empty()) return table5_models();
  std::vector<ModelConfig> out;
  for (const auto& n : names) out.push_back(model_by_name(n));
  return out;
}

inline CsvTable perf_grid(const Config& cfg) {
  CsvTable t{{"model", "arch", "year", "scenario", "pod_size", "n_domains", "f_ib", "prefill_tps", "tps",
              "power_kw", "tps_per_watt"},
             {}};
  for (const auto& m : resolve_models(cfg.perf.models))
    for (const auto& a : resolve_archs(cfg.perf.archs))
      for (int y : cfg.perf.years) {
        if (y < a.available_from) continue;
        for (Scenario s : cfg.perf.scenarios)
          for (int p : cfg.perf.pod_sizes) {
            const DeploymentPerf d = deployment_perf(a, y, GrowthScenario::of(s), p);
            const int nd = n_domains(m, d);
            t.add(m.name, a.name, y, to_string(s), p, nd, ib_fraction(nd), phase_tps(m, d, Phase::Prefill),
                  request_tps(m, d, cfg.perf.decode), d.P_kw, tps_per_watt(m, d, cfg.perf.decode));
          }
      }
  return t;
}

// Pod payoff.

struct PayoffRow {
  std::string design;
  std::string model;
  int pod_size = 1;
  double delta_tps_per_w = 0.0;
  double delta_cost = 0.0;
  double payoff = 0.0;
};

struct FleetCostRecord {
  std::string scenario;
  int pod_size = 1;
  std::string design;
  double effective = 0.0;
};

inline std::vector<FleetCostRecord> cost_records(const json& summary) {
  if (!summary.contains("runs")) throw ConfigError("fleet summary has no runs");
  std::vector<FleetCostRecord> out;
  for (const auto& r : summary.at("runs"))
    out.push_back({r.at("scenario").get<std::string>(), r.at("pod_size").get<int>(), r.at("design").get<std::string>(),
                   r.at("effective_usd_per_mw").get<double>()});
  return out;
}

/// Joins mean fleet effective cost per pod size with the serving gain of the
/// same pod size; both are relative to single-rack deployment.
inline std::vector<PayoffRow> pod_payoffs(const Config& cfg, const std::vector<FleetCostRecord>& costs) {
  const std::string scen(to_string(cfg.payoff.scenario));
  std::map<std::pair<std::string, int>, std::vector<double>> eff;
  for (const auto& c : costs)
    if (c.scenario == scen) eff[{c.design, c.pod_size}].push_back(c.effective);
  auto mean_cost = [&](const std::string& d, int p) -> std::optional<double> {
    auto it = eff.find({d, p});
    if (it == eff.end() || it->second.empty()) return std::nullopt;
    double s = 0.0;
    for (double v : it->second) s += v;
    return s / it->second.size();
  };

  const int year = cfg.payoff_year();
  const GrowthScenario gs = GrowthScenario::of(cfg.payoff.scenario);
  const DeploymentArch arch = trajectory_by_name(cfg.trace.gpu_trajectory).arch_for(year);
  std::vector<PayoffRow> out;
  for (const auto& dn : cfg.payoff.designs) {
    const auto base = mean_cost(dn, 1);
    if (!base)
      throw ConfigError("fleet summary lacks single-rack runs for " + dn + " under " + scen + "; run run-fleet first");
    std::vector<int> pods;
    for (const auto& [k, v] : eff)
      if (k.first == dn) pods.push_back(k.second);
    for (const auto& m : resolve_models(cfg.payoff.models)) {
      const double tpw1 = tps_per_watt(m, deployment_perf(arch, year, gs, 1), cfg.payoff.decode);
      for (int p : pods) {
        PayoffRow r;
        r.design = dn;
        r.model = m.name;
        r.pod_size = p;
        r.delta_tps_per_w = tps_per_watt(m, deployment_perf(arch, year, gs, p), cfg.payoff.decode) / tpw1 - 1.0;
        r.delta_cost = *mean_cost(dn, p) / *base - 1.0;
        r.payoff = pod_payoff(r.delta_tps_per_w, r.delta_cost);
        out.push_back(r);
      }
    }
  }
  return out;
}

inline CsvTable payoff_table(const std::vector<PayoffRow>& rows) {
  CsvTable t{{"design", "model", "pod_size", "delta_tps_per_w", "delta_cost", "payoff"}, {}};
  for (const auto& r : rows) t.add(r.design, r.model, r.pod_size, r.delta_tps_per_w, r.delta_cost, r.payoff);
  return t;
}

/// Smallest pod size above one with positive payoff.
inline std::optional<int> payoff_crossover(const std::vector<PayoffRow>& rows, const std::string& design,
                                           const std::string& model) {
  std::optional<int> best;
  for (const auto& r : rows)
    if (r.design == design && r.model == model && r.pod_size > 1 && r.payoff > 0 && (!best || r.pod_size < *best))
      best = r.pod_size;
  return best;
}

// Hall cost.

inline CsvTable hall_cost_table(const Config& cfg) {
  CsvTable t{{"design", "lineups", "ld_rows", "hd_rows", "ha_mw", "provisioned_mw", "capex_usd", "base_usd_per_mw"},
             {}};
  for (const auto& d : cfg.designs)
    t.add(d.name, d.redundancy.total_lineups(), d.ld_rows, d.hd_rows, d.ha_capacity_kw() / 1000.0,
          d.provisioned_lineup_kw() / 1000.0, hall_capex(d, cfg.cost), base_cost_per_mw(d, cfg.cost));
  return t;
}

inline CsvTable cost_components_table(const Config& cfg) {
  CsvTable t{{"design", "component", "basis", "usd_per_mw", "applies", "capex_usd"}, {}};
  for (const auto& d : cfg.designs) {
    const double ha = d.ha_capacity_kw() / 1000.0;
    const double prov = d.provisioned_lineup_kw() / 1000.0 * cfg.cost.provisioned_reference;
    for (const auto& c : cfg.cost.components) {
      const bool on = component_applies(c, d.redundancy);
      const double mw = c.basis == CostBasis::PerHaMw ? ha : prov;
      t.add(d.name, c.name, c.basis == CostBasis::PerHaMw ? "ha" : "provisioned", c.usd_per_mw, on,
            on ? c.usd_per_mw * mw : 0.0);
    }
  }
  return t;
}

}  // namespace dcsim
