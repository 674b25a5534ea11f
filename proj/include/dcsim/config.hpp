#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcsim/arrivals.hpp"
#include "dcsim/hardware.hpp"
#include "dcsim/hierarchy.hpp"
#include "dcsim/metrics.hpp"
#include "dcsim/perfmodel.hpp"
#include "dcsim/placement.hpp"

namespace dcsim {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SweepSettings {
  std::vector<std::string> designs{"4N/3", "3+1"};
  double p_min_kw = 100.0;
  double p_max_kw = 1300.0;
  double step_kw = 25.0;
  int trials = 20;
  Policy policy = Policy::VarianceMin;
  int fail_streak = 100;

  std::vector<double> powers() const {
    std::vector<double> out;
    if (!(step_kw > 0)) return out;
    const int n = static_cast<int>(std::floor((p_max_kw - p_min_kw) / step_kw + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) out.push_back(p_min_kw + i * step_kw);
    return out;
  }
};

/// Mixed-arrival single-hall Monte Carlo.
struct PolicyMcSettings {
  std::vector<std::string> designs{"10N/8", "8+2"};
  std::vector<Policy> policies{kAllPolicies.begin(), kAllPolicies.end()};
  int year = 2030;
  Scenario scenario = Scenario::High;
  /// GPU, compute, storage arrival shares.
  std::array<double, 3> mix{0.6, 0.28, 0.12};
  int pod_size = 1;
  int trials = 100;
  int fail_streak = 100;
  bool harvest = true;
};

struct FleetSettings {
  std::vector<std::string> designs{"3+1", "8+2", "4N/3", "10N/8"};
  std::vector<Scenario> scenarios{Scenario::High};
  std::vector<int> pod_sizes{1, 3, 4, 5, 6, 7};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  Policy policy = Policy::VarianceMin;
  int horizon = 108;
  int start_year = 2026;
  bool harvest = false;
  int quantum = 10;
};

struct PerfSettings {
  std::vector<std::string> models;
  std::vector<std::string> archs;
  std::vector<int> years{2026, 2028, 2030, 2032, 2034};
  std::vector<Scenario> scenarios{Scenario::Low, Scenario::Med, Scenario::High};
  std::vector<int> pod_sizes{1, 2, 3, 4, 5, 6, 7};
  DecodeTerm decode = DecodeTerm::PerBatchStep;
};

struct PayoffSettings {
  std::vector<std::string> designs{"10N/8", "8+2"};
  std::vector<std::string> models;
  Scenario scenario = Scenario::High;
  /// Year the serving model is evaluated in; 0 means the last fleet year.
  int year = 0;
  DecodeTerm decode = DecodeTerm::PerBatchStep;
};

struct Config {
  std::string name = "custom";
  std::vector<HallDesign> designs;
  TraceConfig trace;
  CostModel cost = CostModel::defaults();
  SweepSettings sweep;
  PolicyMcSettings policy_mc;
  FleetSettings fleet;
  PerfSettings perf;
  PayoffSettings payoff;
  json source;

  const HallDesign& design(const std::string& name) const {
    for (const auto& d : designs)
      if (d.name == name) return d;
    throw ConfigError("unknown design: " + name);
  }

  /// Trace settings for one fleet run.
  TraceConfig fleet_trace(Scenario s, int pod) const {
    TraceConfig t = trace;
    t.gpu_scenario = GrowthScenario::of(s);
    t.pod_size = pod;
    t.horizon = fleet.horizon;
    t.start_year = fleet.start_year;
    t.harvest = fleet.harvest;
    t.compute.quantum = fleet.quantum;
    t.storage.quantum = fleet.quantum;
    return t;
  }

  int payoff_year() const { return payoff.year > 0 ? payoff.year : fleet.start_year + (fleet.horizon - 1) / 12; }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline DecodeTerm parse_decode(const std::string& s) {
  if (s == "batch_step") return DecodeTerm::PerBatchStep;
  if (s == "token") return DecodeTerm::PerToken;
  throw ConfigError("decode_term must be batch_step or token, got " + s);
}

inline std::string decode_name(DecodeTerm t) { return t == DecodeTerm::PerBatchStep ? "batch_step" : "token"; }

inline std::vector<Scenario> parse_scenarios(const json& j) {
  std::vector<Scenario> out;
  for (const auto& s : j) out.push_back(parse_scenario(s.get<std::string>()));
  return out;
}

inline json scenario_names(const std::vector<Scenario>& v) {
  json a = json::array();
  for (auto s : v) a.push_back(std::string(to_string(s)));
  return a;
}

inline HallDesign parse_design(const json& j) {
  if (j.is_string()) {
    const auto n = j.get<std::string>();
    if (n == "4N/3") return design_4n3();
    if (n == "3+1") return design_3p1();
    if (n == "10N/8") return design_10n8();
    if (n == "8+2") return design_8p2();
    throw ConfigError("unknown built-in design: " + n);
  }
  if (!j.contains("redundancy")) throw ConfigError("design needs a redundancy section");
  const json& r = j.at("redundancy");
  const auto kind = get_or<std::string>(r, "kind", "distributed");
  const int domains = get_or(r, "domains", 1);
  RedundancyConfig rc;
  if (kind == "distributed")
    rc = RedundancyConfig::distributed(get_or(r, "total", 0), get_or(r, "usable", 0), domains);
  else if (kind == "block")
    rc = RedundancyConfig::block(get_or(r, "primary", 0), get_or(r, "reserve", 0), domains);
  else
    throw ConfigError("redundancy kind must be distributed or block, got " + kind);
  try {
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  HallDesign d = HallDesign::with_default_rows(get_or<std::string>(j, "name", rc.name()), rc,
                                               get_or(j, "ld_per_hd", 1.5));
  d.lineup_rating_kw = get_or(j, "lineup_kw", d.lineup_rating_kw);
  d.ld_row_rating_kw = get_or(j, "ld_row_kw", d.ld_row_rating_kw);
  d.hd_row_rating_kw = get_or(j, "hd_row_kw", d.hd_row_rating_kw);
  d.ld_rows = get_or(j, "ld_rows", d.ld_rows);
  d.hd_rows = get_or(j, "hd_rows", d.hd_rows);
  d.tiles_per_row = get_or(j, "tiles_per_row", d.tiles_per_row);
  d.hd_row_liquid_lpm = get_or(j, "hd_row_liquid_lpm", d.hd_row_liquid_lpm);
  d.cross_row_same_feeds = get_or(j, "cross_row_same_feeds", d.cross_row_same_feeds);
  return d;
}

inline json design_json(const HallDesign& d) {
  json r;
  if (d.redundancy.is_block())
    r = {{"kind", "block"}, {"primary", d.redundancy.n_primary}, {"reserve", d.redundancy.k_reserve}};
  else
    r = {{"kind", "distributed"}, {"total", d.redundancy.x}, {"usable", d.redundancy.y}};
  r["domains"] = d.redundancy.power_domains;
  return {{"name", d.name},
          {"redundancy", r},
          {"lineup_kw", d.lineup_rating_kw},
          {"ld_row_kw", d.ld_row_rating_kw},
          {"hd_row_kw", d.hd_row_rating_kw},
          {"ld_rows", d.ld_rows},
          {"hd_rows", d.hd_rows},
          {"tiles_per_row", d.tiles_per_row},
          {"hd_row_liquid_lpm", d.hd_row_liquid_lpm},
          {"cross_row_same_feeds", d.cross_row_same_feeds}};
}

inline ArrivalEnvelope parse_envelope(const json& j) {
  ArrivalEnvelope e;
  e.cls = parse_rack_class(get_or<std::string>(j, "class", ""));
  e.growth = get_or(j, "growth", 0.0);
  e.cap_mw = get_or(j, "cap_mw", e.cap_mw);
  if (j.contains("cumulative_mw")) {
    // initial level such that the yearly targets sum to the cumulative figure
    const double total = j.at("cumulative_mw").get<double>();
    const int years = get_or(j, "years", 9);
    const double g = e.growth;
    const double geo = std::abs(g) < 1e-12 ? years : (std::pow(1.0 + g, years) - 1.0) / g;
    e.initial_mw = total / geo;
  } else {
    e.initial_mw = get_or(j, "initial_mw", 0.0);
  }
  if (j.contains("seasonality")) {
    const auto s = j.at("seasonality").get<std::vector<double>>();
    if (s.size() != 12) throw ConfigError("seasonality needs 12 weights");
    std::copy(s.begin(), s.end(), e.seasonality.begin());
  }
  try {
    e.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return e;
}

}  // namespace detail

namespace detail {

inline Config config_from_json_impl(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Config c;
  c.source = j;
  c.name = get_or<std::string>(j, "name", c.name);

  if (j.contains("designs")) {
    for (const auto& d : j.at("designs")) c.designs.push_back(detail::parse_design(d));
  } else {
    c.designs = {design_4n3(), design_3p1(), design_10n8(), design_8p2()};
  }

  if (j.contains("hardware")) {
    const json& h = j.at("hardware");
    c.trace.gpu_trajectory = get_or<std::string>(h, "gpu_trajectory", c.trace.gpu_trajectory);
    trajectory_by_name(c.trace.gpu_trajectory);
    c.trace.nongpu_scenario = parse_scenario(get_or<std::string>(h, "nongpu_scenario", "Med"));
    c.trace.gpu_feeds = get_or(h, "gpu_feeds", c.trace.gpu_feeds);
    c.trace.cooling.air_cfm_per_kw = get_or(h, "air_cfm_per_kw", c.trace.cooling.air_cfm_per_kw);
    c.trace.cooling.gpu_liquid_lpm_per_rack = get_or(h, "liquid_lpm_per_rack", c.trace.cooling.gpu_liquid_lpm_per_rack);
    c.trace.cooling.gpu_air_fraction = get_or(h, "gpu_air_fraction", c.trace.cooling.gpu_air_fraction);
  }

  if (j.contains("envelopes"))
    for (const auto& e : j.at("envelopes")) c.trace.envelopes.push_back(detail::parse_envelope(e));

  if (j.contains("cost_model")) {
    const json& cm = j.at("cost_model");
    c.cost.provisioned_reference = get_or(cm, "provisioned_reference", c.cost.provisioned_reference);
    if (cm.contains("components")) {
      c.cost.components.clear();
      for (const auto& x : cm.at("components")) {
        CostComponent cc;
        cc.name = get_or<std::string>(x, "name", "");
        cc.usd_per_mw = get_or(x, "usd_per_mw", 0.0);
        const auto basis = get_or<std::string>(x, "basis", "ha");
        if (basis == "ha")
          cc.basis = CostBasis::PerHaMw;
        else if (basis == "provisioned")
          cc.basis = CostBasis::PerProvisionedMw;
        else
          throw ConfigError("cost basis must be ha or provisioned, got " + basis);
        const auto app = get_or<std::string>(x, "applies", "all");
        if (app == "all")
          cc.applies = Applicability::All;
        else if (app == "block")
          cc.applies = Applicability::BlockOnly;
        else if (app == "distributed")
          cc.applies = Applicability::DistributedOnly;
        else
          throw ConfigError("cost applicability must be all, block or distributed, got " + app);
        c.cost.components.push_back(cc);
      }
    }
    try {
      c.cost.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  const json ex = j.value("experiments", json::object());
  if (ex.contains("sweep")) {
    const json& s = ex.at("sweep");
    c.sweep.designs = get_or(s, "designs", c.sweep.designs);
    c.sweep.p_min_kw = get_or(s, "p_min_kw", c.sweep.p_min_kw);
    c.sweep.p_max_kw = get_or(s, "p_max_kw", c.sweep.p_max_kw);
    c.sweep.step_kw = get_or(s, "step_kw", c.sweep.step_kw);
    c.sweep.trials = get_or(s, "trials", c.sweep.trials);
    c.sweep.fail_streak = get_or(s, "fail_streak", c.sweep.fail_streak);
    c.sweep.policy = parse_policy(get_or<std::string>(s, "policy", std::string(to_string(c.sweep.policy))));
    if (!(c.sweep.step_kw > 0)) throw ConfigError("sweep step_kw must be positive");
  }
  if (ex.contains("policy_mc")) {
    const json& s = ex.at("policy_mc");
    c.policy_mc.designs = get_or(s, "designs", c.policy_mc.designs);
    if (s.contains("policies")) {
      c.policy_mc.policies.clear();
      for (const auto& p : s.at("policies")) c.policy_mc.policies.push_back(parse_policy(p.get<std::string>()));
    }
    c.policy_mc.year = get_or(s, "year", c.policy_mc.year);
    c.policy_mc.scenario = parse_scenario(get_or<std::string>(s, "scenario", "High"));
    if (s.contains("mix")) {
      const auto m = s.at("mix").get<std::vector<double>>();
      if (m.size() != 3) throw ConfigError("policy_mc mix needs three shares (gpu, compute, storage)");
      std::copy(m.begin(), m.end(), c.policy_mc.mix.begin());
    }
    c.policy_mc.pod_size = get_or(s, "pod_size", c.policy_mc.pod_size);
    c.policy_mc.trials = get_or(s, "trials", c.policy_mc.trials);
    c.policy_mc.fail_streak = get_or(s, "fail_streak", c.policy_mc.fail_streak);
    c.policy_mc.harvest = get_or(s, "harvest", c.policy_mc.harvest);
  }
  if (ex.contains("fleet")) {
    const json& s = ex.at("fleet");
    c.fleet.designs = get_or(s, "designs", c.fleet.designs);
    if (s.contains("scenarios")) c.fleet.scenarios = detail::parse_scenarios(s.at("scenarios"));
    c.fleet.pod_sizes = get_or(s, "pod_sizes", c.fleet.pod_sizes);
    c.fleet.seeds = get_or(s, "seeds", c.fleet.seeds);
    c.fleet.policy = parse_policy(get_or<std::string>(s, "policy", std::string(to_string(c.fleet.policy))));
    c.fleet.horizon = get_or(s, "horizon", c.fleet.horizon);
    c.fleet.start_year = get_or(s, "start_year", c.fleet.start_year);
    c.fleet.harvest = get_or(s, "harvest", c.fleet.harvest);
    c.fleet.quantum = get_or(s, "quantum", c.fleet.quantum);
    for (int p : c.fleet.pod_sizes)
      if (p < 1) throw ConfigError("pod sizes must be >= 1");
    if (c.fleet.horizon < 0) throw ConfigError("fleet horizon must be >= 0");
  }
  if (ex.contains("perf")) {
    const json& s = ex.at("perf");
    c.perf.models = get_or(s, "models", c.perf.models);
    c.perf.archs = get_or(s, "archs", c.perf.archs);
    c.perf.years = get_or(s, "years", c.perf.years);
    if (s.contains("scenarios")) c.perf.scenarios = detail::parse_scenarios(s.at("scenarios"));
    c.perf.pod_sizes = get_or(s, "pod_sizes", c.perf.pod_sizes);
    c.perf.decode = detail::parse_decode(get_or<std::string>(s, "decode_term", "batch_step"));
  }
  if (ex.contains("payoff")) {
    const json& s = ex.at("payoff");
    c.payoff.designs = get_or(s, "designs", c.payoff.designs);
    c.payoff.models = get_or(s, "models", c.payoff.models);
    c.payoff.scenario = parse_scenario(get_or<std::string>(s, "scenario", "High"));
    c.payoff.year = get_or(s, "year", c.payoff.year);
    c.payoff.decode = detail::parse_decode(get_or<std::string>(s, "decode_term", "batch_step"));
  }

  // every referenced name must resolve
  for (const auto* names : {&c.sweep.designs, &c.policy_mc.designs, &c.fleet.designs, &c.payoff.designs})
    for (const auto& n : *names) c.design(n);
  for (const auto* names : {&c.perf.models, &c.payoff.models})
    for (const auto& n : *names) {
      try {
        model_by_name(n);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  for (const auto& a : c.perf.archs) {
    bool found = false;
    for (const auto& b : builtin_archs()) found = found || b.name == a;
    if (!found) throw ConfigError("unknown architecture: " + a);
  }
  return c;
}

}  // namespace detail

/// Builds a config from JSON.  Missing sections keep their defaults.
inline Config config_from_json(const json& j) {
  try {
    return detail::config_from_json_impl(j);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

/// Canonical JSON of the resolved config; the digest is computed over this.
inline json config_to_json(const Config& c) {
  json j;
  j["name"] = c.name;
  j["designs"] = json::array();
  for (const auto& d : c.designs) j["designs"].push_back(detail::design_json(d));
  j["hardware"] = {{"gpu_trajectory", c.trace.gpu_trajectory},
                   {"nongpu_scenario", std::string(to_string(c.trace.nongpu_scenario))},
                   {"gpu_feeds", c.trace.gpu_feeds},
                   {"air_cfm_per_kw", c.trace.cooling.air_cfm_per_kw},
                   {"liquid_lpm_per_rack", c.trace.cooling.gpu_liquid_lpm_per_rack},
                   {"gpu_air_fraction", c.trace.cooling.gpu_air_fraction}};
  j["envelopes"] = json::array();
  for (const auto& e : c.trace.envelopes) {
    json x = {{"class", std::string(to_string(e.cls))},
              {"initial_mw", e.initial_mw},
              {"growth", e.growth},
              {"seasonality", std::vector<double>(e.seasonality.begin(), e.seasonality.end())}};
    if (std::isfinite(e.cap_mw)) x["cap_mw"] = e.cap_mw;
    j["envelopes"].push_back(x);
  }
  json comps = json::array();
  for (const auto& x : c.cost.components)
    comps.push_back({{"name", x.name},
                     {"usd_per_mw", x.usd_per_mw},
                     {"basis", x.basis == CostBasis::PerHaMw ? "ha" : "provisioned"},
                     {"applies", x.applies == Applicability::All         ? "all"
                                 : x.applies == Applicability::BlockOnly ? "block"
                                                                         : "distributed"}});
  j["cost_model"] = {{"provisioned_reference", c.cost.provisioned_reference}, {"components", comps}};

  json pols = json::array();
  for (auto p : c.policy_mc.policies) pols.push_back(std::string(to_string(p)));
  json& ex = j["experiments"];
  ex["sweep"] = {{"designs", c.sweep.designs},   {"p_min_kw", c.sweep.p_min_kw},
                 {"p_max_kw", c.sweep.p_max_kw}, {"step_kw", c.sweep.step_kw},
                 {"trials", c.sweep.trials},     {"policy", std::string(to_string(c.sweep.policy))},
                 {"fail_streak", c.sweep.fail_streak}};
  ex["policy_mc"] = {{"designs", c.policy_mc.designs},
                     {"policies", pols},
                     {"year", c.policy_mc.year},
                     {"scenario", std::string(to_string(c.policy_mc.scenario))},
                     {"mix", std::vector<double>(c.policy_mc.mix.begin(), c.policy_mc.mix.end())},
                     {"pod_size", c.policy_mc.pod_size},
                     {"trials", c.policy_mc.trials},
                     {"fail_streak", c.policy_mc.fail_streak},
                     {"harvest", c.policy_mc.harvest}};
  ex["fleet"] = {{"designs", c.fleet.designs},
                 {"scenarios", detail::scenario_names(c.fleet.scenarios)},
                 {"pod_sizes", c.fleet.pod_sizes},
                 {"seeds", c.fleet.seeds},
                 {"policy", std::string(to_string(c.fleet.policy))},
                 {"horizon", c.fleet.horizon},
                 {"start_year", c.fleet.start_year},
                 {"harvest", c.fleet.harvest},
                 {"quantum", c.fleet.quantum}};
  ex["perf"] = {{"models", c.perf.models},
                {"archs", c.perf.archs},
                {"years", c.perf.years},
                {"scenarios", detail::scenario_names(c.perf.scenarios)},
                {"pod_sizes", c.perf.pod_sizes},
                {"decode_term", detail::decode_name(c.perf.decode)}};
  ex["payoff"] = {{"designs", c.payoff.designs},
                  {"models", c.payoff.models},
                  {"scenario", std::string(to_string(c.payoff.scenario))},
                  {"year", c.payoff.year},
                  {"decode_term", detail::decode_name(c.payoff.decode)}};
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

inline std::string config_digest(const Config& c) { return hex64(fnv1a(config_to_json(c).dump())); }

// Presets.

inline json preset_table2_desk() {
  // 10 GW (6.0 / 2.8 / 1.2) scaled to 0.5 GW over 2026-2034
  auto env = [](const char* cls, double mw) {
    return json{{"class", cls}, {"cumulative_mw", mw}, {"years", 9}, {"growth", 0.15}};
  };
  return {{"name", "table2-desk"},
          {"designs", {"3+1", "8+2", "4N/3", "10N/8"}},
          {"hardware", {{"gpu_trajectory", "oberon"}, {"nongpu_scenario", "Med"}}},
          {"envelopes", {env("gpu", 300.0), env("compute", 140.0), env("storage", 60.0)}},
          {"experiments", json::object()}};
}

inline json preset_smoke() {
  json j = preset_table2_desk();
  j["name"] = "smoke";
  j["envelopes"] = {{{"class", "gpu"}, {"cumulative_mw", 12.0}, {"years", 2}, {"growth", 0.15}},
                    {{"class", "compute"}, {"cumulative_mw", 5.6}, {"years", 2}, {"growth", 0.15}},
                    {{"class", "storage"}, {"cumulative_mw", 2.4}, {"years", 2}, {"growth", 0.15}}};
  j["experiments"] = {
      {"sweep", {{"p_min_kw", 400}, {"p_max_kw", 1300}, {"step_kw", 150}, {"trials", 2}}},
      {"policy_mc", {{"trials", 4}, {"fail_streak", 20}}},
      {"fleet", {{"pod_sizes", {1, 3}}, {"seeds", {1}}, {"horizon", 24}}},
      {"perf", {{"models", {"MoE-0.6T", "MoE-132T"}}, {"years", {2030}}, {"scenarios", {"High"}}, {"pod_sizes", {1, 3}}}},
      {"payoff", {{"models", {"MoE-0.6T", "MoE-132T"}}}}};
  return j;
}

inline std::vector<std::string> preset_names() { return {"table2-desk", "smoke"}; }

inline Config load_preset(const std::string& name) {
  if (name == "table2-desk") return config_from_json(preset_table2_desk());
  if (name == "smoke") return config_from_json(preset_smoke());
  throw ConfigError("unknown preset: " + name);
}

inline Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace dcsim
