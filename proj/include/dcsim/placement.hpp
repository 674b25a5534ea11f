#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcsim/arrivals.hpp"
#include "dcsim/hierarchy.hpp"
#include "dcsim/resource.hpp"

namespace dcsim {

/// Headroom each surviving parent must hold to absorb a deployment of `p` kW
/// fed by `k` parents when one of them fails.
inline double failover_headroom(double p, int k) {
  if (k < 2) throw std::invalid_argument("failover_headroom needs k >= 2");
  return p / (k - 1);
}

/// Fraction of a block of capacity `c` left over after admitting floor(c/p)
/// deployments of power `p`.
inline double block_leftover(double c, double p) {
  if (!(c > 0 && p > 0)) throw std::invalid_argument("block_leftover needs c > 0 and p > 0");
  return (c - std::floor(c / p) * p) / c;
}

inline bool row_accepts_class(RowClass row, RackClass cls) {
  return cls == RackClass::GPU ? row == RowClass::HighDensity : row == RowClass::LowDensity;
}

/// Power drawn by a deployment from one row.  The first segment is the host row;
/// further segments are cross-row cable draws from adjacent rows.
struct Segment {
  std::size_t row = 0;
  double power = 0.0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Placement {
  std::uint64_t deployment = 0;
  std::size_t hall = 0;
  std::size_t row = 0;
  std::vector<int> tiles;
  std::vector<Segment> segments;
  /// Current demand (shrinks when harvested).
  ResourceVector demand;
  Tier tier = Tier::HA;
  /// Failover headroom required at each feed parent when placed.
  std::vector<std::pair<std::size_t, double>> failover;
  bool harvested = false;
};

struct Infeasibility {
  NodeKind level = NodeKind::Row;
  std::size_t node = 0;
  Resource resource = Resource::Power;
  double headroom = 0.0;
  double required = 0.0;
  std::string reason;

  std::string describe() const {
    std::ostringstream os;
    os << (level == NodeKind::Row ? "row" : level == NodeKind::LineUp ? "line-up" : "substation") << " " << node
       << " " << to_string(resource) << ": headroom " << headroom << " < " << required << " required";
    if (!reason.empty()) os << " (" << reason << ")";
    return os.str();
  }
};

struct FeasibilityResult {
  bool feasible = false;
  Infeasibility binding;
  std::vector<Segment> segments;
  /// Per load-bearing line-up: (line-up, load added, failover headroom required).
  std::vector<std::tuple<std::size_t, double, double>> lineup_terms;

  explicit operator bool() const { return feasible; }
};

/// Mutable load ledger over one immutable hall.
class HallState {
 public:
  HallState(std::shared_ptr<const Hall> hall, std::size_t index) : hall_(std::move(hall)), index_(index) {
    load_.assign(hall_->nodes().size(), ResourceVector{});
    tiles_.assign(hall_->nodes().size(), {});
    for (std::size_t r : hall_->rows()) tiles_[r].assign(static_cast<std::size_t>(hall_->node(r).rated.tiles), false);
  }

  const Hall& hall() const { return *hall_; }
  std::shared_ptr<const Hall> hall_ptr() const { return hall_; }
  std::size_t index() const { return index_; }
  const ResourceVector& load(std::size_t node) const { return load_.at(node); }
  const std::vector<ResourceVector>& loads() const { return load_; }

  int free_tiles(std::size_t row) const {
    return static_cast<int>(std::count(tiles_[row].begin(), tiles_[row].end(), false));
  }

  /// Power capacity a line-up offers to load of the given tier.
  double lineup_capacity(std::size_t lu, Tier tier) const { return hall_->effective_power(lu, tier); }

  /// Fraction of HA capacity used at each load-bearing line-up.
  double lineup_fraction(std::size_t lu) const {
    const double c = lineup_capacity(lu, Tier::HA);
    return c > 0 ? load_[lu].power / c : 0.0;
  }

  FeasibilityResult check(std::size_t row, const Deployment& d) const {
    FeasibilityResult res;
    const HierarchyNode& host = hall_->node(row);
    auto fail = [&](NodeKind lvl, std::size_t node, Resource r, double headroom, double required,
                    std::string why = {}) {
      res.feasible = false;
      res.binding = {lvl, node, r, headroom, required, std::move(why)};
      return res;
    };
    if (host.kind != NodeKind::Row) throw std::invalid_argument("check: node is not a row");
    if (!row_accepts_class(host.row_class, d.cls))
      return fail(NodeKind::Row, row, Resource::Tiles, 0.0, d.demand.tiles, "row class");

    const ResourceVector& rl = load_[row];
    const double free = free_tiles(row);
    if (d.demand.tiles > free) return fail(NodeKind::Row, row, Resource::Tiles, free, d.demand.tiles);
    for (Resource r : {Resource::Air, Resource::Liquid}) {
      const double head = host.rated[r] - rl[r];
      if (d.demand[r] > head) return fail(NodeKind::Row, row, r, head, d.demand[r]);
    }

    const double spare = host.rated.power - rl.power;
    if (d.demand.power <= host.rated.power) {
      if (d.demand.power > spare) return fail(NodeKind::Row, row, Resource::Power, spare, d.demand.power);
      res.segments.push_back({row, d.demand.power});
    } else {
      // Larger than one row: draw the rest over cross-row cables from the
      // neighbouring rows of the same class.
      double remaining = d.demand.power;
      if (spare > 0) {
        res.segments.push_back({row, spare});
        remaining -= spare;
      } else {
        res.segments.push_back({row, 0.0});
      }
      for (std::size_t donor : hall_->adjacent_rows(row)) {
        if (remaining <= 0) break;
        const HierarchyNode& dn = hall_->node(donor);
        if (dn.row_class != host.row_class) continue;
        const double give = std::min(remaining, dn.rated.power - load_[donor].power);
        if (give <= 0) continue;
        res.segments.push_back({donor, give});
        remaining -= give;
      }
      if (remaining > 0)
        return fail(NodeKind::Row, row, Resource::Power, d.demand.power - remaining, d.demand.power, "cross-row");
    }

    // Line-up level.
    const RedundancyConfig& red = hall_->redundancy();
    std::map<std::size_t, std::pair<double, double>> terms;  // load added, failover needed
    for (const Segment& s : res.segments) {
      if (s.power <= 0) continue;
      const HierarchyNode& sr = hall_->node(s.row);
      const int k = static_cast<int>(sr.feeds.size());
      for (std::size_t f : sr.feeds) {
        auto& t = terms[f];
        t.first += s.power / k;
        if (!red.is_block() && d.tier == Tier::HA) t.second += failover_headroom(s.power, k);
      }
    }
    for (const auto& [f, t] : terms) {
      const double cap = lineup_capacity(f, red.is_block() ? Tier::LA : d.tier);
      const double head = cap - load_[f].power;
      if (!red.is_block() && d.tier == Tier::HA) {
        if (head < t.second - 1e-9 || head < t.first)
          return fail(NodeKind::LineUp, f, Resource::Power, head, std::max(t.second, t.first), "failover headroom");
      } else if (head < t.first) {
        return fail(NodeKind::LineUp, f, Resource::Power, head, t.first);
      }
      res.lineup_terms.emplace_back(f, t.first, t.second);
    }

    // Substation.
    const HierarchyNode& root = hall_->node(hall_->root());
    const ResourceVector& sl = load_[hall_->root()];
    const double sub_cap = hall_->effective_power(hall_->root(), d.tier);
    if (sl.power + d.demand.power > sub_cap)
      return fail(NodeKind::Substation, 0, Resource::Power, sub_cap - sl.power, d.demand.power);
    for (Resource r : {Resource::Air, Resource::Liquid, Resource::Tiles}) {
      if (sl[r] + d.demand[r] > root.rated[r]) return fail(NodeKind::Substation, 0, r, root.rated[r] - sl[r], d.demand[r]);
    }

    res.feasible = true;
    return res;
  }

  /// Commits a feasible plan.  The caller must have obtained `plan` from
  /// check() on this state without intervening changes.
  Placement commit(std::size_t row, const Deployment& d, const FeasibilityResult& plan) {
    if (!plan.feasible) throw std::logic_error("commit of an infeasible plan");
    Placement p;
    p.deployment = d.id;
    p.hall = index_;
    p.row = row;
    p.segments = plan.segments;
    p.demand = d.demand;
    p.tier = d.tier;
    for (const auto& [f, add, need] : plan.lineup_terms)
      if (need > 0) p.failover.emplace_back(f, need);
    int want = static_cast<int>(d.demand.tiles);
    for (std::size_t i = 0; i < tiles_[row].size() && want > 0; ++i) {
      if (!tiles_[row][i]) {
        tiles_[row][i] = true;
        p.tiles.push_back(static_cast<int>(i));
        --want;
      }
    }
    apply(p, +1);
    return p;
  }

  void remove(const Placement& p) {
    apply(p, -1);
    for (int t : p.tiles) tiles_[p.row][t] = false;
  }

  /// Releases `fraction` of power and cooling from a placement.
  void harvest(Placement& p, double fraction) {
    apply(p, -1);
    double total = 0.0;
    for (Segment& s : p.segments) {
      s.power = quantize(s.power * (1.0 - fraction));
      total += s.power;
    }
    p.demand.power = total;
    p.demand.air = quantize(p.demand.air * (1.0 - fraction));
    p.demand.liquid = quantize(p.demand.liquid * (1.0 - fraction));
    p.harvested = true;
    apply(p, +1);
  }

  /// Per-node contributions of one placement.
  std::vector<std::pair<std::size_t, ResourceVector>> contributions(const Placement& p) const {
    std::vector<std::pair<std::size_t, ResourceVector>> out;
    out.emplace_back(hall_->root(), p.demand);
    for (std::size_t i = 0; i < p.segments.size(); ++i) {
      const Segment& s = p.segments[i];
      ResourceVector rv{s.power, 0.0, 0.0, 0.0};
      if (i == 0) {
        rv.air = p.demand.air;
        rv.liquid = p.demand.liquid;
        rv.tiles = p.demand.tiles;
      }
      out.emplace_back(s.row, rv);
      const HierarchyNode& sr = hall_->node(s.row);
      const double share = s.power / static_cast<double>(sr.feeds.size());
      for (std::size_t f : sr.feeds) out.emplace_back(f, ResourceVector{share, 0.0, 0.0, 0.0});
    }
    return out;
  }

  /// Loads rebuilt from scratch from a set of placements.
  std::vector<ResourceVector> recompute(const std::vector<const Placement*>& placements) const {
    std::vector<ResourceVector> out(load_.size());
    for (const Placement* p : placements)
      for (const auto& [node, rv] : contributions(*p)) out[node] += rv;
    return out;
  }

 private:
  void apply(const Placement& p, int sign) {
    for (const auto& [node, rv] : contributions(p)) {
      if (sign > 0) load_[node] += rv;
      else load_[node] -= rv;
    }
  }

  std::shared_ptr<const Hall> hall_;
  std::size_t index_ = 0;
  std::vector<ResourceVector> load_;
  std::vector<std::vector<bool>> tiles_;
};

struct FleetState {
  std::vector<HallState> halls;
  std::map<std::uint64_t, Placement> active;
  int clock = 0;

  int halls_built() const { return static_cast<int>(halls.size()); }

  HallState& open_hall(std::shared_ptr<const Hall> hall) {
    halls.emplace_back(std::move(hall), halls.size());
    return halls.back();
  }

  /// True when every ledger equals its from-scratch recomputation.
  bool ledgers_consistent() const {
    std::vector<std::vector<const Placement*>> per_hall(halls.size());
    for (const auto& [id, p] : active) per_hall[p.hall].push_back(&p);
    for (std::size_t h = 0; h < halls.size(); ++h)
      if (halls[h].recompute(per_hall[h]) != halls[h].loads()) return false;
    return true;
  }

  /// True when no node load exceeds its rated capacity and every load-bearing
  /// line-up stays within the capacity its tier mix allows.
  bool within_capacity() const {
    for (const HallState& hs : halls) {
      const Hall& hall = hs.hall();
      for (const HierarchyNode& n : hall.nodes()) {
        const ResourceVector& l = hs.load(n.id);
        if (!l.non_negative()) return false;
        if (n.kind == NodeKind::LineUp) {
          if (l.power > n.rated.power) return false;
        } else if (!l.fits_within(n.rated)) {
          return false;
        }
      }
    }
    return true;
  }
};

enum class Policy : std::uint8_t { MinWaste, Random, RoundRobin, VarianceMin };

inline constexpr std::array<Policy, 4> kAllPolicies{Policy::MinWaste, Policy::Random, Policy::RoundRobin,
                                                     Policy::VarianceMin};

inline constexpr std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::MinWaste: return "MinWaste";
    case Policy::Random: return "Random";
    case Policy::RoundRobin: return "RoundRobin";
    case Policy::VarianceMin: return "VarianceMin";
  }
  return "?";
}

inline Policy parse_policy(std::string_view s) {
  for (Policy p : kAllPolicies)
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown policy: " + std::string(s));
}

/// Policy-side mutable state: random stream and round-robin cursor.
struct PolicyState {
  Rng rng{0};
  std::size_t rr_hall = 0;
  std::size_t rr_row = 0;
};

struct PlaceOutcome {
  std::optional<Placement> placement;
  /// Binding constraint of the last rejected candidate when nothing fits.
  Infeasibility failure;
  explicit operator bool() const { return placement.has_value(); }
};

namespace detail {

inline double lineup_variance_after(const HallState& hs, const FeasibilityResult& plan) {
  const Hall& hall = hs.hall();
  std::vector<double> frac;
  frac.reserve(hall.active_lineups().size());
  for (std::size_t f : hall.active_lineups()) {
    double l = hs.load(f).power;
    for (const auto& [g, add, need] : plan.lineup_terms)
      if (g == f) l += add;
    const double c = hs.lineup_capacity(f, Tier::HA);
    frac.push_back(c > 0 ? l / c : 0.0);
  }
  double mean = 0.0;
  for (double x : frac) mean += x;
  mean /= frac.size();
  double var = 0.0;
  for (double x : frac) var += (x - mean) * (x - mean);
  return var / frac.size();
}

struct Candidate {
  std::size_t hall;
  std::size_t row_pos;
  FeasibilityResult plan;
};

}  // namespace detail

/// Places one deployment into the fleet under the policy.  Candidates are all
/// feasible (hall, row) pairs; ties go to the lowest (hall, row).
inline PlaceOutcome place(Policy policy, FleetState& state, const Deployment& d, PolicyState& ps) {
  PlaceOutcome out;
  out.failure.reason = "no rows";

  auto commit = [&](std::size_t h, std::size_t pos, const FeasibilityResult& plan) {
    HallState& hs = state.halls[h];
    const std::size_t row = hs.hall().rows()[pos];
    Placement p = hs.commit(row, d, plan);
    state.active[d.id] = p;
    out.placement = std::move(p);
  };

  if (policy == Policy::RoundRobin) {
    // Walk the global (hall, row) order cyclically from the cursor.
    std::size_t total = 0;
    for (const auto& hs : state.halls) total += hs.hall().rows().size();
    if (total == 0) return out;
    std::size_t h = std::min(ps.rr_hall, state.halls.size() - 1);
    std::size_t pos = ps.rr_hall < state.halls.size() ? ps.rr_row : 0;
    if (ps.rr_hall >= state.halls.size()) h = 0;
    for (std::size_t step = 0; step < total; ++step) {
      if (pos >= state.halls[h].hall().rows().size()) {
        pos = 0;
        h = (h + 1) % state.halls.size();
      }
      const HallState& hs = state.halls[h];
      FeasibilityResult plan = hs.check(hs.hall().rows()[pos], d);
      if (plan) {
        commit(h, pos, plan);
        ps.rr_hall = h;
        ps.rr_row = pos + 1;
        return out;
      }
      out.failure = plan.binding;
      ++pos;
    }
    return out;
  }

  std::vector<detail::Candidate> feasible;
  for (std::size_t h = 0; h < state.halls.size(); ++h) {
    const HallState& hs = state.halls[h];
    const auto rows = hs.hall().rows();
    for (std::size_t pos = 0; pos < rows.size(); ++pos) {
      FeasibilityResult plan = hs.check(rows[pos], d);
      if (plan) feasible.push_back({h, pos, std::move(plan)});
      else out.failure = plan.binding;
    }
  }
  if (feasible.empty()) return out;

  std::size_t pick = 0;
  switch (policy) {
    case Policy::Random:
      pick = std::uniform_int_distribution<std::size_t>(0, feasible.size() - 1)(ps.rng);
      break;
    case Policy::MinWaste: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < feasible.size(); ++i) {
        const HallState& hs = state.halls[feasible[i].hall];
        const std::size_t row = hs.hall().rows()[feasible[i].row_pos];
        const double residual = hs.hall().node(row).rated.power - hs.load(row).power - feasible[i].plan.segments[0].power;
        if (residual < best) {
          best = residual;
          pick = i;
        }
      }
      break;
    }
    case Policy::VarianceMin: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < feasible.size(); ++i) {
        const double v = detail::lineup_variance_after(state.halls[feasible[i].hall], feasible[i].plan);
        if (v < best - 1e-12) {
          best = v;
          pick = i;
        }
      }
      break;
    }
    case Policy::RoundRobin:
      break;
  }
  commit(feasible[pick].hall, feasible[pick].row_pos, feasible[pick].plan);
  return out;
}

/// Removes a deployment's placement.  Returns false when it is not active.
inline bool decommission(FleetState& state, std::uint64_t id) {
  auto it = state.active.find(id);
  if (it == state.active.end()) return false;
  state.halls[it->second.hall].remove(it->second);
  state.active.erase(it);
  return true;
}

inline bool harvest(FleetState& state, std::uint64_t id, double fraction) {
  auto it = state.active.find(id);
  if (it == state.active.end() || it->second.harvested) return false;
  state.halls[it->second.hall].harvest(it->second, fraction);
  return true;
}

}  // namespace dcsim
