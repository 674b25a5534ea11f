#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcsim/hierarchy.hpp"
#include "dcsim/placement.hpp"
#include "dcsim/resource.hpp"

namespace dcsim {

struct LevelStranding {
  ResourceVector provisioned;
  ResourceVector load;
  ResourceVector unused;
  ResourceVector stranded;

  LevelStranding& operator+=(const LevelStranding& o) {
    provisioned += o.provisioned;
    load += o.load;
    unused += o.unused;
    stranded += o.stranded;
    return *this;
  }
};

/// Unused capacity is stranded at a node when no probe deployment fits below it.
struct StrandingReport {
  LevelStranding lineup;
  LevelStranding row;
  LevelStranding hall;
  /// Load-bearing HA capacity the fractions are normalised by.
  double ha_capacity = 0.0;

  /// Line-up stranded power over HA capacity.
  double stranded_fraction() const { return ha_capacity > 0 ? lineup.stranded.power / ha_capacity : 0.0; }

  StrandingReport& operator+=(const StrandingReport& o) {
    lineup += o.lineup;
    row += o.row;
    hall += o.hall;
    ha_capacity += o.ha_capacity;
    return *this;
  }
};

inline StrandingReport stranded_capacity(const HallState& hs, const std::vector<Deployment>& probes) {
  if (probes.empty()) throw std::invalid_argument("stranded_capacity needs at least one probe");
  const Hall& hall = hs.hall();
  StrandingReport rep;
  rep.ha_capacity = hall.ha_capacity_kw();

  std::vector<char> row_fits(hall.nodes().size(), 0);
  bool any_fits = false;
  for (std::size_t r : hall.rows()) {
    for (const Deployment& p : probes) {
      if (!row_accepts_class(hall.node(r).row_class, p.cls)) continue;
      if (hs.check(r, p)) {
        row_fits[r] = 1;
        any_fits = true;
        break;
      }
    }
    const HierarchyNode& n = hall.node(r);
    const ResourceVector unused = n.rated - hs.load(r);
    rep.row.provisioned += n.rated;
    rep.row.load += hs.load(r);
    rep.row.unused += unused;
    if (!row_fits[r]) rep.row.stranded += unused;
  }

  for (std::size_t f : hall.active_lineups()) {
    const double load = hs.load(f).power;
    double prov = hs.lineup_capacity(f, Tier::HA);
    if (load > prov) prov = hs.lineup_capacity(f, Tier::LA);
    const ResourceVector pv{prov, 0.0, 0.0, 0.0};
    const ResourceVector lv{load, 0.0, 0.0, 0.0};
    rep.lineup.provisioned += pv;
    rep.lineup.load += lv;
    rep.lineup.unused += pv - lv;
    bool fits = false;
    for (std::size_t r : hall.rows_fed_by(f)) fits = fits || row_fits[r];
    if (!fits) rep.lineup.stranded += pv - lv;
  }

  const HierarchyNode& root = hall.node(hall.root());
  ResourceVector prov = root.rated;
  prov.power = std::max(hall.ha_capacity_kw(), hs.load(root.id).power);
  rep.hall.provisioned = prov;
  rep.hall.load = hs.load(root.id);
  rep.hall.unused = prov - hs.load(root.id);
  if (!any_fits) rep.hall.stranded = rep.hall.unused;
  return rep;
}

/// Site-level report: the sum over halls.
inline StrandingReport stranded_capacity(const FleetState& fs, const std::vector<Deployment>& probes) {
  StrandingReport total;
  for (const HallState& hs : fs.halls) total += stranded_capacity(hs, probes);
  return total;
}

// Cost model.

enum class CostBasis : std::uint8_t { PerHaMw, PerProvisionedMw };
enum class Applicability : std::uint8_t { All, BlockOnly, DistributedOnly };

struct CostComponent {
  std::string name;
  double usd_per_mw = 0.0;
  CostBasis basis = CostBasis::PerHaMw;
  Applicability applies = Applicability::All;
};

struct CostModel {
  std::vector<CostComponent> components;
  /// Provisioned line-up MW is weighted by this factor, so a hall whose HA
  /// share equals it pays exactly the table rate.
  double provisioned_reference = 0.75;

  static CostModel defaults() {
    using B = CostBasis;
    using A = Applicability;
    CostModel m;
    m.components = {
        {"ups", 1'000'000, B::PerProvisionedMw, A::All},
        {"batteries", 275'000, B::PerProvisionedMw, A::All},
        {"generators", 750'000, B::PerHaMw, A::All},
        {"mv_transformers", 120'000, B::PerHaMw, A::All},
        {"mv_switchgear", 60'000, B::PerHaMw, A::All},
        {"lv_switchboards", 150'000, B::PerProvisionedMw, A::All},
        {"ats", 70'000, B::PerHaMw, A::All},
        {"sts", 250'000, B::PerProvisionedMw, A::BlockOnly},
        {"row_distribution", 100'000, B::PerHaMw, A::All},
        {"busbar", 6'000, B::PerHaMw, A::All},
        {"cooling", 3'000'000, B::PerHaMw, A::All},
        {"shell_site", 1'800'000, B::PerHaMw, A::All},
        {"fit_out", 2'800'000, B::PerHaMw, A::All},
    };
    return m;
  }

  /// Sum of all entries, $/MW.
  double flat_sum() const {
    double s = 0.0;
    for (const auto& c : components) s += c.usd_per_mw;
    return s;
  }

  void validate() const {
    for (const auto& c : components)
      if (c.usd_per_mw < 0) throw std::invalid_argument("negative cost entry: " + c.name);
    if (!(provisioned_reference > 0)) throw std::invalid_argument("provisioned_reference must be positive");
  }
};

inline bool component_applies(const CostComponent& c, const RedundancyConfig& r) {
  switch (c.applies) {
    case Applicability::All: return true;
    case Applicability::BlockOnly: return r.is_block();
    case Applicability::DistributedOnly: return !r.is_block();
  }
  return true;
}

/// Hall CapEx in dollars.
inline double hall_capex(const HallDesign& design, const CostModel& model = CostModel::defaults()) {
  design.redundancy.validate();
  model.validate();
  const double ha_mw = design.ha_capacity_kw() / 1000.0;
  const double prov_mw = design.provisioned_lineup_kw() / 1000.0 * model.provisioned_reference;
  double total = 0.0;
  for (const auto& c : model.components) {
    if (!component_applies(c, design.redundancy)) continue;
    total += c.usd_per_mw * (c.basis == CostBasis::PerHaMw ? ha_mw : prov_mw);
  }
  return total;
}

/// Initial $/MW: CapEx over nameplate HA MW.
inline double base_cost_per_mw(const HallDesign& design, const CostModel& model = CostModel::defaults()) {
  return hall_capex(design, model) / (design.ha_capacity_kw() / 1000.0);
}

/// Total CapEx over total deployed MW.  Each entry is (CapEx $, deployed MW).
inline double effective_cost(const std::vector<std::pair<double, double>>& halls) {
  double k = 0.0, p = 0.0;
  for (const auto& [cap, mw] : halls) {
    k += cap;
    p += mw;
  }
  if (!(p > 0)) throw std::invalid_argument("effective_cost needs positive deployed MW");
  return k / p;
}

inline double pod_payoff(double delta_tps_per_w, double delta_cost) {
  if (!(delta_cost > -1.0)) throw std::invalid_argument("pod_payoff needs delta_cost > -1");
  return (1.0 + delta_tps_per_w) / (1.0 + delta_cost) - 1.0;
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - lo);
}

}  // namespace dcsim
