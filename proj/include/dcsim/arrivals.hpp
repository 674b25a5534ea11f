#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcsim/hardware.hpp"
#include "dcsim/hierarchy.hpp"
#include "dcsim/resource.hpp"

namespace dcsim {

using Rng = std::mt19937_64;

/// Class-level demand envelope.  Annual targets compound from `initial_mw`
/// and are capped at `cap_mw`; months split the year by `seasonality`.
struct ArrivalEnvelope {
  RackClass cls = RackClass::Compute;
  double initial_mw = 0.0;
  double growth = 0.0;
  double cap_mw = std::numeric_limits<double>::infinity();
  std::array<double, 12> seasonality = uniform_seasonality();

  static std::array<double, 12> uniform_seasonality() {
    std::array<double, 12> w{};
    w.fill(1.0 / 12.0);
    return w;
  }

  void validate() const {
    if (initial_mw < 0 || growth < -1) throw std::invalid_argument("envelope level and growth out of range");
    if (cap_mw < initial_mw) throw std::invalid_argument("envelope cap below initial level");
    double sum = 0.0;
    for (double w : seasonality) {
      if (w < 0) throw std::invalid_argument("seasonality weights must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("seasonality weights must sum to 1");
  }

  double annual_target_mw(int year_index) const {
    return std::min(initial_mw * std::pow(1.0 + growth, year_index), cap_mw);
  }
};

struct LifetimeModel {
  double mean_years = 7.0;
  double sd_years = 1.0;
  int min_months = 12;
};

inline LifetimeModel default_lifetime(RackClass c) {
  if (c == RackClass::GPU) return {5.0, 0.5, 12};
  return {7.0, 1.0, 12};
}

inline double default_harvest_fraction(RackClass c) { return c == RackClass::GPU ? 0.10 : 0.15; }

struct Deployment {
  std::uint64_t id = 0;
  RackClass cls = RackClass::Compute;
  /// Per-rack power, kW.
  double sku_power = 0.0;
  /// Whole-deployment demand (all racks of the quantum or pod).
  ResourceVector demand;
  Tier tier = Tier::HA;
  int feeds = 2;
  /// Racks placed together in one row.
  int quantum = 1;
  /// Racks per GPU pod, 1 for rack-scale or non-GPU deployments.
  int pod_racks = 1;
  int arrival = 0;
  int lifetime = 0;
  int harvest_month = -1;
  double harvest_fraction = 0.0;

  int decommission_month() const { return arrival + lifetime; }
  int racks() const { return quantum; }
  double power() const { return demand.power; }
};

/// Demand released by harvesting one year after arrival.
inline std::optional<std::pair<int, ResourceVector>> harvest_schedule(const Deployment& d, bool enabled) {
  if (!enabled || d.harvest_fraction <= 0.0) return std::nullopt;
  ResourceVector r{d.demand.power * d.harvest_fraction, d.demand.air * d.harvest_fraction,
                   d.demand.liquid * d.harvest_fraction, 0.0};
  return std::make_pair(d.arrival + 12, quantized(r));
}

inline int sample_lifetime(const LifetimeModel& m, Rng& rng) {
  if (m.sd_years <= 0.0) return std::max(m.min_months, static_cast<int>(std::lround(m.mean_years * 12.0)));
  std::normal_distribution<double> dist(m.mean_years * 12.0, m.sd_years * 12.0);
  for (;;) {
    const double v = dist(rng);
    if (v >= m.min_months) return static_cast<int>(std::lround(v));
  }
}

inline int sample_lifetime(RackClass c, Rng& rng) { return sample_lifetime(default_lifetime(c), rng); }

enum class EventKind : std::uint8_t { Decommission = 0, Harvest = 1, Deploy = 2 };

inline constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Decommission: return "decommission";
    case EventKind::Harvest: return "harvest";
    case EventKind::Deploy: return "deploy";
  }
  return "?";
}

struct TraceEvent {
  int month = 0;
  EventKind kind = EventKind::Deploy;
  std::uint64_t deployment = 0;

  friend bool operator<(const TraceEvent& a, const TraceEvent& b) {
    if (a.month != b.month) return a.month < b.month;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.deployment < b.deployment;
  }
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
  std::uint64_t seed = 0;
  int horizon = 0;
  int start_year = 2026;
  /// Indexed by deployment id.
  std::vector<Deployment> deployments;
  std::vector<TraceEvent> events;

  const Deployment& deployment(std::uint64_t id) const { return deployments.at(id); }
};

struct ClassSettings {
  std::vector<SkuCluster> clusters = default_sku_clusters();
  /// Same-SKU racks per non-GPU deployment.
  int quantum = 10;
  int feeds = 2;
  double la_fraction = 0.0;
  double harvest_fraction = 0.15;
  LifetimeModel lifetime{};
};

struct TraceConfig {
  std::vector<ArrivalEnvelope> envelopes;
  int horizon = 108;
  int start_year = 2026;
  GrowthScenario gpu_scenario = GrowthScenario::of(Scenario::High);
  Scenario nongpu_scenario = Scenario::Med;
  std::string gpu_trajectory = "oberon";
  int pod_size = 1;
  int gpu_feeds = 4;
  double gpu_la_fraction = 0.0;
  double gpu_harvest_fraction = 0.10;
  LifetimeModel gpu_lifetime = default_lifetime(RackClass::GPU);
  ClassSettings compute{default_sku_clusters(), 10, 2, 0.0, 0.15, default_lifetime(RackClass::Compute)};
  ClassSettings storage{default_sku_clusters(), 10, 2, 0.0, 0.15, default_lifetime(RackClass::Storage)};
  bool harvest = false;
  CoolingModel cooling{};
};

namespace detail {

inline Rng class_stream(std::uint64_t seed, RackClass c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(c) + 1u};
  return Rng(seq);
}

}  // namespace detail

/// Samples deployments month by month until each class's budget is met.
/// Unfilled (or overshot) budget carries to the next month of the same year.
inline Trace generate_trace(const TraceConfig& cfg, std::uint64_t seed) {
  if (cfg.envelopes.empty()) throw std::invalid_argument("generate_trace needs at least one envelope");
  if (cfg.horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (cfg.pod_size < 1) throw std::invalid_argument("pod_size must be >= 1");
  for (const auto& e : cfg.envelopes) e.validate();

  Trace trace;
  trace.seed = seed;
  trace.horizon = cfg.horizon;
  trace.start_year = cfg.start_year;

  const GpuTrajectory gpu = trajectory_by_name(cfg.gpu_trajectory);
  std::vector<Rng> streams;
  std::vector<double> carry(cfg.envelopes.size(), 0.0);
  for (const auto& e : cfg.envelopes) {
    validate_clusters(e.cls == RackClass::Compute ? cfg.compute.clusters : cfg.storage.clusters);
    streams.push_back(detail::class_stream(seed, e.cls));
  }

  for (int month = 0; month < cfg.horizon; ++month) {
    const int year_index = month / 12;
    const int year = cfg.start_year + year_index;
    if (month % 12 == 0) std::fill(carry.begin(), carry.end(), 0.0);

    for (std::size_t ei = 0; ei < cfg.envelopes.size(); ++ei) {
      const ArrivalEnvelope& env = cfg.envelopes[ei];
      Rng& rng = streams[ei];
      const double target_kw = env.annual_target_mw(year_index) * 1000.0 * env.seasonality[month % 12] + carry[ei];
      double deployed = 0.0;
      while (deployed < target_kw - 1e-9) {
        Deployment d;
        d.id = trace.deployments.size();
        d.cls = env.cls;
        d.arrival = month;
        if (env.cls == RackClass::GPU) {
          d.sku_power = quantize(gpu.rack_power(year, cfg.gpu_scenario));
          d.quantum = cfg.pod_size;
          d.pod_racks = cfg.pod_size;
          d.feeds = cfg.gpu_feeds;
          d.harvest_fraction = cfg.gpu_harvest_fraction;
          if (cfg.gpu_la_fraction > 0 && std::bernoulli_distribution(cfg.gpu_la_fraction)(rng)) d.tier = Tier::LA;
          d.lifetime = sample_lifetime(cfg.gpu_lifetime, rng);
        } else {
          const ClassSettings& cs = env.cls == RackClass::Compute ? cfg.compute : cfg.storage;
          std::vector<double> probs;
          for (const auto& c : cs.clusters) probs.push_back(c.probability);
          const std::size_t j = std::discrete_distribution<std::size_t>(probs.begin(), probs.end())(rng);
          d.sku_power = quantize(sku_power(cs.clusters[j], nongpu_power_trajectory(env.cls, year, cfg.nongpu_scenario)));
          d.quantum = cs.quantum;
          d.feeds = cs.feeds;
          d.harvest_fraction = cs.harvest_fraction;
          if (cs.la_fraction > 0 && std::bernoulli_distribution(cs.la_fraction)(rng)) d.tier = Tier::LA;
          d.lifetime = sample_lifetime(cs.lifetime, rng);
        }
        d.demand = quantized(cooling_demand(d.cls, d.sku_power, d.quantum, cfg.cooling));
        if (cfg.harvest && d.harvest_fraction > 0 && 12 < d.lifetime) d.harvest_month = month + 12;
        deployed += d.demand.power;
        trace.deployments.push_back(d);
      }
      carry[ei] = target_kw - deployed;
    }
  }

  for (const auto& d : trace.deployments) {
    trace.events.push_back({d.arrival, EventKind::Deploy, d.id});
    if (d.harvest_month >= 0 && d.harvest_month < cfg.horizon)
      trace.events.push_back({d.harvest_month, EventKind::Harvest, d.id});
    if (d.decommission_month() < cfg.horizon)
      trace.events.push_back({d.decommission_month(), EventKind::Decommission, d.id});
  }
  std::sort(trace.events.begin(), trace.events.end());
  return trace;
}

}  // namespace dcsim
