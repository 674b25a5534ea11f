#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dcsim/resource.hpp"

namespace dcsim {

enum class Scenario : std::uint8_t { Low = 0, Med = 1, High = 2 };
enum class RackClass : std::uint8_t { GPU, Compute, Storage };

inline constexpr std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Low: return "Low";
    case Scenario::Med: return "Med";
    case Scenario::High: return "High";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "Low" || s == "low") return Scenario::Low;
  if (s == "Med" || s == "med" || s == "Medium" || s == "medium") return Scenario::Med;
  if (s == "High" || s == "high") return Scenario::High;
  throw std::invalid_argument("unknown scenario: " + std::string(s));
}

inline constexpr std::string_view to_string(RackClass c) {
  switch (c) {
    case RackClass::GPU: return "gpu";
    case RackClass::Compute: return "compute";
    case RackClass::Storage: return "storage";
  }
  return "?";
}

inline RackClass parse_rack_class(std::string_view s) {
  if (s == "gpu" || s == "GPU") return RackClass::GPU;
  if (s == "compute" || s == "Compute") return RackClass::Compute;
  if (s == "storage" || s == "Storage") return RackClass::Storage;
  throw std::invalid_argument("unknown rack class: " + std::string(s));
}

struct GrowthScenario {
  Scenario label = Scenario::Med;
  double gpu_tdp_growth = 0.125;

  static GrowthScenario of(Scenario s) {
    constexpr std::array<double, 3> g{0.05, 0.125, 0.20};
    return {s, g[static_cast<int>(s)]};
  }
};

/// Per-package capability: FP4 PFLOP/s, HBM TB/s, HBM GB.
struct PackagePerf {
  double flops_pf = 0.0;
  double hbm_bw_tbs = 0.0;
  double hbm_gb = 0.0;
};

struct PerfGrowth {
  double flops = 0.30;
  double hbm_bw = 0.15;
  double hbm_cap = 0.25;
};

/// Package TDP per scenario (Low, Med, High), kW.
using ScenarioTriple = std::array<double, 3>;

struct DeploymentArch {
  std::string name;
  int available_from = 2025;
  int n_pkg = 72;
  int dies_per_pkg = 1;
  int nvl_domain_pkgs = 72;
  double b_nvl_tbs = 0.0;
  double b_ib_tbs = 0.0;
  double p_ovhd_kw = 0.0;
  /// Package TDP anchors by year.  Past the last anchor year the TDP compounds
  /// at the scenario growth rate.
  std::map<int, ScenarioTriple> tdp_anchors_kw;
  /// Package performance anchors by year, held until `perf_hold_until` and
  /// extrapolated at `perf_growth` afterwards.
  std::map<int, PackagePerf> perf_anchors;
  int perf_hold_until = 2028;
  PerfGrowth perf_growth{};

  void validate() const {
    if (n_pkg < 1 || nvl_domain_pkgs < 1 || nvl_domain_pkgs > n_pkg)
      throw std::invalid_argument(name + ": need 1 <= nvl_domain_pkgs <= n_pkg");
    if (!(b_nvl_tbs > 0 && b_ib_tbs > 0)) throw std::invalid_argument(name + ": bandwidths must be positive");
    if (tdp_anchors_kw.empty() || perf_anchors.empty()) throw std::invalid_argument(name + ": missing anchors");
  }
};

namespace detail {

template <class Map>
auto anchor_at(const Map& m, int year, const std::string& name) {
  auto it = m.upper_bound(year);
  if (it == m.begin()) throw std::invalid_argument(name + ": no anchor at or before " + std::to_string(year));
  return std::prev(it);
}

inline std::map<int, ScenarioTriple> rack_table_to_tdp(const std::map<int, ScenarioTriple>& rack_kw, double ovhd,
                                                       int n_pkg) {
  std::map<int, ScenarioTriple> out;
  for (const auto& [year, row] : rack_kw)
    for (int s = 0; s < 3; ++s) out[year][s] = (row[s] - ovhd) / n_pkg;
  return out;
}

}  // namespace detail

inline void require_available(const DeploymentArch& arch, int year) {
  if (year < arch.available_from)
    throw std::invalid_argument(arch.name + " is not available in " + std::to_string(year));
}

inline double package_tdp(const DeploymentArch& arch, int year, const GrowthScenario& s) {
  require_available(arch, year);
  auto it = detail::anchor_at(arch.tdp_anchors_kw, year, arch.name);
  const double base = it->second[static_cast<int>(s.label)];
  return base * std::pow(1.0 + s.gpu_tdp_growth, year - it->first);
}

inline PackagePerf package_perf(const DeploymentArch& arch, int year) {
  require_available(arch, year);
  const int held = std::min(year, std::max(arch.perf_hold_until, arch.perf_anchors.rbegin()->first));
  auto it = detail::anchor_at(arch.perf_anchors, held, arch.name);
  PackagePerf p = it->second;
  const int n = year - held;
  if (n > 0) {
    p.flops_pf *= std::pow(1.0 + arch.perf_growth.flops, n);
    p.hbm_bw_tbs *= std::pow(1.0 + arch.perf_growth.hbm_bw, n);
    p.hbm_gb *= std::pow(1.0 + arch.perf_growth.hbm_cap, n);
  }
  return p;
}

/// N_pkg * P_pkg + P_ovhd.
inline double gpu_rack_power(const DeploymentArch& arch, int year, const GrowthScenario& s) {
  return arch.n_pkg * package_tdp(arch, year, s) + arch.p_ovhd_kw;
}

inline double pod_power(const std::vector<double>& racks_kw) {
  if (racks_kw.empty()) throw std::invalid_argument("pod needs at least one rack");
  return std::accumulate(racks_kw.begin(), racks_kw.end(), 0.0);
}

// Built-in architectures.  Oberon TDP anchors are the derived rack-power table
// inverted per year; Kyber is anchored in 2027, held through 2028.

inline DeploymentArch arch_dgx_h200() {
  DeploymentArch a;
  a.name = "DGX-H200";
  a.available_from = 2024;
  a.n_pkg = 8;
  a.dies_per_pkg = 1;
  a.nvl_domain_pkgs = 8;
  a.b_nvl_tbs = 3.6;
  a.b_ib_tbs = 0.4;
  a.p_ovhd_kw = 3.0;
  a.tdp_anchors_kw = {{2024, {0.7, 0.7, 0.7}}};
  a.perf_anchors = {{2024, {1.979, 4.8, 141.0}}};
  return a;
}

inline DeploymentArch arch_blackwell_oberon() {
  DeploymentArch a;
  a.name = "Blackwell-Oberon";
  a.available_from = 2025;
  a.n_pkg = 72;
  a.dies_per_pkg = 1;
  a.nvl_domain_pkgs = 72;
  a.b_nvl_tbs = 64.8;
  a.b_ib_tbs = 7.2;
  a.p_ovhd_kw = 25.0;
  a.tdp_anchors_kw = detail::rack_table_to_tdp({{2025, {157, 180, 203}}}, a.p_ovhd_kw, a.n_pkg);
  a.perf_anchors = {{2025, {10.0, 8.0, 192.0}}};
  return a;
}

inline DeploymentArch arch_vera_rubin() {
  DeploymentArch a;
  a.name = "VeraRubin-NVL72";
  a.available_from = 2026;
  a.n_pkg = 72;
  a.dies_per_pkg = 2;
  a.nvl_domain_pkgs = 72;
  a.b_nvl_tbs = 259.2;
  a.b_ib_tbs = 14.4;
  a.p_ovhd_kw = 30.0;
  a.tdp_anchors_kw = detail::rack_table_to_tdp({{2026, {160, 178, 196}},
                                                {2027, {166, 197, 226}},
                                                {2028, {173, 218, 262}},
                                                {2029, {180, 243, 341}},
                                                {2030, {188, 271, 434}},
                                                {2031, {197, 303, 545}},
                                                {2032, {205, 339, 677}},
                                                {2033, {214, 379, 836}},
                                                {2034, {224, 425, 1025}}},
                                               a.p_ovhd_kw, a.n_pkg);
  a.perf_anchors = {{2026, {50.0, 22.0, 288.0}}};
  return a;
}

inline DeploymentArch arch_kyber() {
  DeploymentArch a;
  a.name = "Kyber-RubinUltra";
  a.available_from = 2027;
  a.n_pkg = 144;
  a.dies_per_pkg = 4;
  a.nvl_domain_pkgs = 144;
  a.b_nvl_tbs = 750.0;
  a.b_ib_tbs = 57.6;
  a.p_ovhd_kw = 35.0;
  const ScenarioTriple anchor{480.0 / 144, 565.0 / 144, 650.0 / 144};
  a.tdp_anchors_kw = {{2027, anchor}, {2028, anchor}};
  a.perf_anchors = {{2027, {100.0, 32.0, 1024.0}}};
  return a;
}

inline std::vector<DeploymentArch> builtin_archs() {
  return {arch_dgx_h200(), arch_blackwell_oberon(), arch_vera_rubin(), arch_kyber()};
}

/// A product line whose architecture changes over time (e.g. Oberon racks
/// carry Blackwell in 2025 and Vera Rubin from 2026).
struct GpuTrajectory {
  std::string name;
  /// (first year, architecture), ascending.
  std::vector<std::pair<int, DeploymentArch>> generations;

  const DeploymentArch& arch_for(int year) const {
    const DeploymentArch* found = nullptr;
    for (const auto& [from, arch] : generations)
      if (year >= from) found = &arch;
    if (!found) throw std::invalid_argument(name + " has no architecture in " + std::to_string(year));
    return *found;
  }

  double rack_power(int year, const GrowthScenario& s) const { return gpu_rack_power(arch_for(year), year, s); }
};

inline GpuTrajectory trajectory_oberon() {
  return {"oberon", {{2025, arch_blackwell_oberon()}, {2026, arch_vera_rubin()}}};
}

inline GpuTrajectory trajectory_kyber() { return {"kyber", {{2027, arch_kyber()}}}; }

inline GpuTrajectory trajectory_by_name(std::string_view name) {
  if (name == "oberon") return trajectory_oberon();
  if (name == "kyber") return trajectory_kyber();
  throw std::invalid_argument("unknown GPU trajectory: " + std::string(name));
}

// Non-GPU racks.

struct SkuCluster {
  double alpha = 1.0;
  double probability = 1.0;
};

inline std::vector<SkuCluster> default_sku_clusters() { return {{1.0, 0.4}, {0.75, 0.3}, {0.5, 0.2}, {0.25, 0.1}}; }

inline void validate_clusters(const std::vector<SkuCluster>& cs) {
  if (cs.empty()) throw std::invalid_argument("empty SKU cluster list");
  double sum = 0.0;
  for (const auto& c : cs) {
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw std::invalid_argument("SKU alpha must lie in (0, 1]");
    if (c.probability < 0.0) throw std::invalid_argument("SKU probability must be >= 0");
    sum += c.probability;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("SKU probabilities must sum to 1");
}

inline double sku_power(const SkuCluster& c, double p_max) {
  if (!(p_max > 0)) throw std::invalid_argument("p_max must be positive");
  return c.alpha * p_max;
}

struct NonGpuTrajectory {
  double anchor_kw = 20.0;
  int anchor_year = 2025;
  ScenarioTriple growth{0.03, 0.05, 0.08};
};

inline NonGpuTrajectory default_nongpu_trajectory(RackClass c) {
  if (c == RackClass::Storage) return {15.0, 2025, {0.02, 0.04, 0.06}};
  if (c == RackClass::Compute) return {20.0, 2025, {0.03, 0.05, 0.08}};
  throw std::invalid_argument("GPU racks use a GpuTrajectory");
}

inline double nongpu_power(const NonGpuTrajectory& t, int year, Scenario s) {
  return t.anchor_kw * std::pow(1.0 + t.growth[static_cast<int>(s)], year - t.anchor_year);
}

inline double nongpu_power_trajectory(RackClass c, int year, Scenario s) {
  return nongpu_power(default_nongpu_trajectory(c), year, s);
}

// Cooling.

struct CoolingModel {
  double air_cfm_per_kw = 165.0;
  double gpu_liquid_lpm_per_rack = 2.0;
  /// Share of GPU rack power that is air cooled (networking, power shelves).
  double gpu_air_fraction = 0.15;
};

/// Demand of `racks` identical racks of the class at `power_kw` each.
inline ResourceVector cooling_demand(RackClass c, double power_kw, int racks = 1, const CoolingModel& m = {}) {
  if (power_kw < 0) throw std::invalid_argument("rack power must be >= 0");
  ResourceVector v;
  v.power = power_kw * racks;
  v.tiles = racks;
  if (c == RackClass::GPU) {
    v.air = m.air_cfm_per_kw * m.gpu_air_fraction * power_kw * racks;
    v.liquid = m.gpu_liquid_lpm_per_rack * racks;
  } else {
    v.air = m.air_cfm_per_kw * power_kw * racks;
  }
  return v;
}

}  // namespace dcsim
