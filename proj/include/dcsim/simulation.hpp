#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcsim/arrivals.hpp"
#include "dcsim/hardware.hpp"
#include "dcsim/hierarchy.hpp"
#include "dcsim/metrics.hpp"
#include "dcsim/parallel.hpp"
#include "dcsim/placement.hpp"

namespace dcsim {

inline Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b)};
  return Rng(seq);
}

/// A deployment of `racks` identical racks of `rack_kw` each.
inline Deployment make_deployment(RackClass cls, double rack_kw, int racks = 1, Tier tier = Tier::HA,
                                  const CoolingModel& cooling = {}) {
  Deployment d;
  d.cls = cls;
  d.sku_power = quantize(rack_kw);
  d.quantum = racks;
  d.pod_racks = cls == RackClass::GPU ? racks : 1;
  d.feeds = cls == RackClass::GPU ? 4 : 2;
  d.tier = tier;
  d.harvest_fraction = default_harvest_fraction(cls);
  d.lifetime = 1 << 20;
  d.demand = quantized(cooling_demand(cls, d.sku_power, racks, cooling));
  return d;
}

// Single-hall Monte Carlo.

struct SingleHallOptions {
  Policy policy = Policy::VarianceMin;
  int fail_streak = 100;
  bool harvest = true;
  std::size_t max_arrivals = 200'000;
};

struct SingleHallResult {
  StrandingReport report;
  std::size_t placed = 0;
  std::size_t arrivals = 0;
};

/// Fills one hall until `fail_streak` consecutive arrivals fail, optionally
/// harvests every placed deployment, then fills again to the same rule.
/// `gen(rng, id)` returns the next arriving deployment.
template <class Gen>
SingleHallResult run_single_hall(std::shared_ptr<const Hall> hall, Gen& gen, const std::vector<Deployment>& probes,
                                 const SingleHallOptions& opt, std::uint64_t seed) {
  FleetState state;
  state.open_hall(std::move(hall));
  PolicyState ps;
  ps.rng = derive_rng(seed, 1);
  Rng arrivals = derive_rng(seed, 2);
  std::map<std::uint64_t, Deployment> placed;
  SingleHallResult res;

  auto fill = [&] {
    int streak = 0;
    while (streak < opt.fail_streak && res.arrivals < opt.max_arrivals) {
      Deployment d = gen(arrivals, static_cast<std::uint64_t>(res.arrivals));
      d.id = res.arrivals++;
      if (place(opt.policy, state, d, ps)) {
        placed.emplace(d.id, d);
        streak = 0;
      } else {
        ++streak;
      }
    }
  };

  fill();
  if (opt.harvest) {
    for (const auto& [id, d] : placed) harvest(state, id, d.harvest_fraction);
    fill();
  }
  res.placed = placed.size();
  res.report = stranded_capacity(state.halls.front(), probes);
  return res;
}

/// Independent trials with per-trial seeds derived from `seed`.
template <class GenFactory>
std::vector<SingleHallResult> single_hall_mc(const HallDesign& design, GenFactory make_gen,
                                             const std::vector<Deployment>& probes, int trials, std::uint64_t seed,
                                             const SingleHallOptions& opt = {}, int workers = 1) {
  if (trials < 1) throw std::invalid_argument("single_hall_mc needs trials >= 1");
  auto hall = make_hall(design);
  return parallel_map(static_cast<std::size_t>(trials), workers, [&](std::size_t t) {
    auto gen = make_gen();
    const std::uint64_t s = derive_rng(seed, 100 + t)();
    return run_single_hall(hall, gen, probes, opt, s);
  });
}

// Fleet simulation.

struct FleetOptions {
  Policy policy = Policy::VarianceMin;
  std::uint64_t seed = 1;
};

struct FleetMonth {
  int month = 0;
  double deployed_mw = 0.0;
  double provisioned_mw = 0.0;
  double stranded_p50 = 0.0;
  double stranded_p90 = 0.0;
  int halls_built = 0;
  double rejected_mw = 0.0;
};

struct FleetResult {
  std::vector<FleetMonth> series;
  int halls_built = 0;
  double capex = 0.0;
  double deployed_mw = 0.0;
  double rejected_mw = 0.0;
  /// Mean of the monthly P90 over the last twelve months.
  double final_p90 = 0.0;

  double effective_cost_per_mw() const { return deployed_mw > 0 ? capex / deployed_mw : 0.0; }
};

/// Smallest admissible deployment per class present in the trace config.
inline std::vector<Deployment> default_probes(const TraceConfig& cfg, int year) {
  std::vector<Deployment> probes;
  for (const auto& env : cfg.envelopes) {
    if (env.cls == RackClass::GPU) {
      const double kw = trajectory_by_name(cfg.gpu_trajectory).rack_power(year, cfg.gpu_scenario);
      Deployment d = make_deployment(RackClass::GPU, kw, cfg.pod_size, Tier::HA, cfg.cooling);
      d.feeds = cfg.gpu_feeds;
      probes.push_back(d);
    } else {
      const ClassSettings& cs = env.cls == RackClass::Compute ? cfg.compute : cfg.storage;
      double alpha = 1.0;
      for (const auto& c : cs.clusters) alpha = std::min(alpha, c.alpha);
      const double kw = alpha * nongpu_power_trajectory(env.cls, year, cfg.nongpu_scenario);
      Deployment d = make_deployment(env.cls, kw, cs.quantum, Tier::HA, cfg.cooling);
      d.feeds = cs.feeds;
      probes.push_back(d);
    }
  }
  return probes;
}

/// Replays a trace month by month: decommissions, harvests, then arrivals.
/// A deployment that fits no active hall opens a new hall (designs are used
/// round-robin); one that does not fit an empty hall either is rejected.
inline FleetResult fleet_sim(const std::vector<HallDesign>& designs, const Trace& trace, const TraceConfig& cfg,
                             const FleetOptions& opt = {}, const CostModel& cost = CostModel::defaults()) {
  if (designs.empty()) throw std::invalid_argument("fleet_sim needs at least one design");
  std::vector<std::shared_ptr<const Hall>> halls;
  for (const auto& d : designs) halls.push_back(make_hall(d));

  FleetState state;
  PolicyState ps;
  ps.rng = derive_rng(opt.seed, 7);
  FleetResult res;
  std::size_t next_design = 0;
  std::vector<std::size_t> hall_design;
  double rejected = 0.0;

  std::size_t ev = 0;
  for (int month = 0; month < trace.horizon; ++month) {
    state.clock = month;
    for (; ev < trace.events.size() && trace.events[ev].month == month; ++ev) {
      const TraceEvent& e = trace.events[ev];
      const Deployment& d = trace.deployment(e.deployment);
      switch (e.kind) {
        case EventKind::Decommission:
          decommission(state, d.id);
          break;
        case EventKind::Harvest:
          harvest(state, d.id, d.harvest_fraction);
          break;
        case EventKind::Deploy: {
          if (place(opt.policy, state, d, ps)) break;
          const std::size_t di = next_design % halls.size();
          HallState probe_hall(halls[di], 0);
          bool fits_empty = false;
          for (std::size_t r : probe_hall.hall().rows())
            if (probe_hall.check(r, d)) {
              fits_empty = true;
              break;
            }
          if (!fits_empty) {
            rejected += d.demand.power / 1000.0;
            break;
          }
          state.open_hall(halls[di]);
          hall_design.push_back(di);
          ++next_design;
          if (!place(opt.policy, state, d, ps)) throw std::logic_error("placement into a fresh hall failed");
          break;
        }
      }
    }

    FleetMonth fm;
    fm.month = month;
    fm.halls_built = state.halls_built();
    fm.rejected_mw = rejected;
    for (const auto& [id, p] : state.active) fm.deployed_mw += p.demand.power / 1000.0;
    const auto probes = default_probes(cfg, trace.start_year + month / 12);
    std::vector<double> fractions;
    for (const HallState& hs : state.halls) {
      fm.provisioned_mw += hs.hall().ha_capacity_kw() / 1000.0;
      fractions.push_back(stranded_capacity(hs, probes).stranded_fraction());
    }
    fm.stranded_p50 = percentile(fractions, 0.5);
    fm.stranded_p90 = percentile(fractions, 0.9);
    res.series.push_back(fm);
  }

  res.halls_built = state.halls_built();
  for (std::size_t di : hall_design) res.capex += hall_capex(designs[di], cost);
  res.rejected_mw = rejected;
  if (!res.series.empty()) {
    res.deployed_mw = res.series.back().deployed_mw;
    const std::size_t n = std::min<std::size_t>(12, res.series.size());
    double s = 0.0;
    for (std::size_t i = res.series.size() - n; i < res.series.size(); ++i) s += res.series[i].stranded_p90;
    res.final_p90 = s / n;
  }
  return res;
}

}  // namespace dcsim
