#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcsim/resource.hpp"

namespace dcsim {

enum class RedundancyKind : std::uint8_t { Distributed, Block };
enum class Tier : std::uint8_t { HA, LA };
enum class NodeKind : std::uint8_t { Substation, LineUp, Row };
enum class RowClass : std::uint8_t { LowDensity, HighDensity };

/// Line-up redundancy of a hall.
///
/// Distributed xN/y: x line-ups, y line-ups worth of usable high-availability
/// capacity; every line-up keeps (1 - y/x) of its rating in reserve.
/// Block N+k: N primary line-ups carry load, k reserve line-ups only absorb
/// failover.  Both kinds partition their line-ups into `power_domains`
/// equal groups; rows never span domains.
struct RedundancyConfig {
  RedundancyKind kind = RedundancyKind::Distributed;
  int x = 4;
  int y = 3;
  int n_primary = 0;
  int k_reserve = 0;
  int power_domains = 1;

  static RedundancyConfig distributed(int total, int usable, int domains = 1) {
    RedundancyConfig r;
    r.kind = RedundancyKind::Distributed;
    r.x = total;
    r.y = usable;
    r.power_domains = domains;
    return r;
  }

  static RedundancyConfig block(int primary, int reserve, int domains = 1) {
    RedundancyConfig r;
    r.kind = RedundancyKind::Block;
    r.x = 0;
    r.y = 0;
    r.n_primary = primary;
    r.k_reserve = reserve;
    r.power_domains = domains;
    return r;
  }

  bool is_block() const { return kind == RedundancyKind::Block; }

  int total_lineups() const { return is_block() ? n_primary + k_reserve : x; }

  /// Line-ups that carry IT load (all of them for distributed designs).
  int load_bearing_lineups() const { return is_block() ? n_primary : x; }

  /// Line-ups worth of usable HA capacity.
  int usable_lineups() const { return is_block() ? n_primary : y; }

  int lineups_per_domain() const { return total_lineups() / power_domains; }

  /// Fraction of a load-bearing line-up's rating usable by HA load.
  double ha_fraction() const { return is_block() ? 1.0 : static_cast<double>(y) / x; }

  void validate() const {
    if (power_domains < 1) throw std::invalid_argument("power_domains must be >= 1");
    if (is_block()) {
      if (n_primary < 1) throw std::invalid_argument("block redundancy needs n_primary >= 1");
      if (k_reserve < 1) throw std::invalid_argument("block redundancy needs k_reserve >= 1");
      if (n_primary % power_domains != 0 || k_reserve % power_domains != 0)
        throw std::invalid_argument("power_domains must divide both primary and reserve line-up counts");
    } else {
      if (!(1 <= y && y < x)) throw std::invalid_argument("distributed redundancy needs 1 <= y < x");
      if (x % power_domains != 0)
        throw std::invalid_argument("power_domains must divide the line-up count");
    }
  }

  std::string name() const {
    if (is_block()) return std::to_string(n_primary) + "+" + std::to_string(k_reserve);
    return std::to_string(x) + "N/" + std::to_string(y);
  }

  friend bool operator==(const RedundancyConfig&, const RedundancyConfig&) = default;
};

struct HierarchyNode {
  std::size_t id = 0;
  NodeKind kind = NodeKind::Row;
  ResourceVector rated;
  std::vector<std::size_t> children;
  /// Row: load-bearing parent line-ups.
  std::vector<std::size_t> feeds;
  /// Row (block designs): reserve line-ups that take over on a primary failure.
  std::vector<std::size_t> standby;
  RowClass row_class = RowClass::LowDensity;
  int domain = 0;
  /// LineUp: block reserve line-up (no IT load).
  bool reserve = false;
  /// Row: position in the hall's physical row order.
  std::size_t position = 0;
};

/// Balance quanta for row counts within one power domain.
struct RowQuanta {
  int low_density = 0;
  int high_density = 0;
};

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline RowQuanta row_quanta(const RedundancyConfig& r) {
  const int per_domain = r.lineups_per_domain();
  if (r.is_block()) {
    const int primaries = r.n_primary / r.power_domains;
    return {primaries, primaries};
  }
  return {static_cast<int>(binomial(per_domain, 2)), static_cast<int>(binomial(per_domain, 4))};
}

/// What N means in the "6N low-density + 4N high-density" reference hall.
enum class RowBase : std::uint8_t { ActiveLineups, TotalLineups };

struct RowCounts {
  int ld = 0;
  int hd = 0;
  friend bool operator==(const RowCounts&, const RowCounts&) = default;
};

/// Smallest balanced row counts near the reference hall (10N rows split by the
/// LD:HD target) whose ratio is closest to the target.
inline RowCounts count_rows(const RedundancyConfig& r, double ld_per_hd = 1.5,
                            RowBase base = RowBase::ActiveLineups) {
  r.validate();
  const RowQuanta q = row_quanta(r);
  const int hall_ld_q = q.low_density * r.power_domains;
  const int hall_hd_q = q.high_density * r.power_domains;
  const int n = base == RowBase::ActiveLineups ? r.usable_lineups() : r.total_lineups();
  const double ref_total = 10.0 * n;
  const double ld_ref = ref_total * ld_per_hd / (1.0 + ld_per_hd);
  const double hd_ref = ref_total / (1.0 + ld_per_hd);

  auto around = [](double ref, int quantum) {
    std::vector<int> out;
    if (quantum <= 0) return std::vector<int>{0};
    const int lo = std::max(1, static_cast<int>(std::floor(ref / quantum)));
    const int hi = std::max(1, static_cast<int>(std::ceil(ref / quantum)));
    out.push_back(lo * quantum);
    if (hi != lo) out.push_back(hi * quantum);
    return out;
  };

  RowCounts best{};
  double best_err = std::numeric_limits<double>::infinity();
  double best_size = std::numeric_limits<double>::infinity();
  for (int ld : around(ld_ref, hall_ld_q)) {
    for (int hd : around(hd_ref, hall_hd_q)) {
      const double err = hd == 0 ? std::numeric_limits<double>::max() : std::abs(double(ld) / hd - ld_per_hd);
      const double size = std::abs(ld + hd - ref_total);
      if (err < best_err - 1e-12 || (std::abs(err - best_err) <= 1e-12 && size < best_size)) {
        best = {ld, hd};
        best_err = err;
        best_size = size;
      }
    }
  }
  return best;
}

struct HallDesign {
  std::string name;
  RedundancyConfig redundancy;
  double lineup_rating_kw = 2500.0;
  double ld_row_rating_kw = 625.0;
  double hd_row_rating_kw = 2500.0;
  int ld_rows = 0;
  int hd_rows = 0;
  int tiles_per_row = 24;
  double air_cfm_per_kw = 165.0;
  /// Liquid loop budget per row.  LD rows carry no direct-to-chip loop.
  double ld_row_liquid_lpm = 0.0;
  double hd_row_liquid_lpm = 48.0;
  /// Cross-row cables may only join rows that share a feed set.
  bool cross_row_same_feeds = false;

  ResourceVector row_capacity(RowClass c) const {
    const double kw = c == RowClass::HighDensity ? hd_row_rating_kw : ld_row_rating_kw;
    const double lpm = c == RowClass::HighDensity ? hd_row_liquid_lpm : ld_row_liquid_lpm;
    return {kw, kw * air_cfm_per_kw, lpm, static_cast<double>(tiles_per_row)};
  }

  /// Nameplate high-availability IT capacity.
  double ha_capacity_kw() const { return redundancy.usable_lineups() * lineup_rating_kw; }

  /// Installed line-up capacity including reserve.
  double provisioned_lineup_kw() const { return redundancy.total_lineups() * lineup_rating_kw; }

  /// A design with balanced default row counts.
  static HallDesign with_default_rows(std::string name, const RedundancyConfig& r, double ld_per_hd = 1.5,
                                      RowBase base = RowBase::ActiveLineups) {
    HallDesign d;
    d.name = std::move(name);
    d.redundancy = r;
    const RowCounts rc = count_rows(r, ld_per_hd, base);
    d.ld_rows = rc.ld;
    d.hd_rows = rc.hd;
    return d;
  }
};

/// The four reference designs compared throughout: two 7.5 MW and two 20 MW halls.
inline HallDesign design_4n3() { return HallDesign::with_default_rows("4N/3", RedundancyConfig::distributed(4, 3, 1)); }
inline HallDesign design_3p1() { return HallDesign::with_default_rows("3+1", RedundancyConfig::block(3, 1, 1)); }
inline HallDesign design_10n8() { return HallDesign::with_default_rows("10N/8", RedundancyConfig::distributed(10, 8, 2)); }
inline HallDesign design_8p2() { return HallDesign::with_default_rows("8+2", RedundancyConfig::block(8, 2, 2)); }

/// Effective power capacity of a line-up (or of any node, given its rated
/// power) under the hall's redundancy and the deployment's availability tier.
inline double effective_capacity(const HierarchyNode& node, const RedundancyConfig& r, Tier tier) {
  const double rated = node.rated.power;
  switch (node.kind) {
    case NodeKind::Row:
      return rated;
    case NodeKind::LineUp:
      if (node.reserve) return 0.0;
      if (!r.is_block() && tier == Tier::HA) return rated * r.ha_fraction();
      return rated;
    case NodeKind::Substation:
      if (r.is_block()) return rated * r.n_primary / r.total_lineups();
      return tier == Tier::HA ? rated * r.ha_fraction() : rated;
  }
  return rated;
}

/// Immutable power-delivery tree: node 0 is the substation, then line-ups,
/// then rows in physical order.
class Hall {
 public:
  const HallDesign& design() const { return design_; }
  const RedundancyConfig& redundancy() const { return design_.redundancy; }
  const std::vector<HierarchyNode>& nodes() const { return nodes_; }
  const HierarchyNode& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t root() const { return 0; }
  std::span<const std::size_t> lineups() const { return lineups_; }
  std::span<const std::size_t> rows() const { return rows_; }
  /// Load-bearing line-ups (block reserves excluded).
  std::span<const std::size_t> active_lineups() const { return active_; }

  double effective_power(std::size_t id, Tier tier) const {
    return effective_capacity(nodes_.at(id), design_.redundancy, tier);
  }

  double ha_capacity_kw() const { return effective_power(root(), Tier::HA); }

  /// Rows whose load-bearing feeds include the line-up.
  const std::vector<std::size_t>& rows_fed_by(std::size_t lineup) const {
    return rows_by_lineup_.at(lineup - 1);
  }

  /// Neighbouring rows in physical order (previous first) that a cross-row
  /// cable may join.
  std::vector<std::size_t> adjacent_rows(std::size_t row) const {
    std::vector<std::size_t> out;
    const std::size_t pos = nodes_.at(row).position;
    const auto& feeds = nodes_.at(row).feeds;
    auto joinable = [&](std::size_t other) {
      return !design_.cross_row_same_feeds || nodes_[other].feeds == feeds;
    };
    if (pos > 0 && joinable(rows_[pos - 1])) out.push_back(rows_[pos - 1]);
    if (pos + 1 < rows_.size() && joinable(rows_[pos + 1])) out.push_back(rows_[pos + 1]);
    return out;
  }

 private:
  friend Hall build_hall(const HallDesign& design);
  HallDesign design_;
  std::vector<HierarchyNode> nodes_;
  std::vector<std::size_t> lineups_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> active_;
  std::vector<std::vector<std::size_t>> rows_by_lineup_;
};

namespace detail {

inline std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k > n || k <= 0) return out;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace detail

/// Builds the hall tree with balanced row-to-line-up wiring.  Throws
/// std::invalid_argument when row counts break the balance multiples.
inline Hall build_hall(const HallDesign& design) {
  const RedundancyConfig& r = design.redundancy;
  r.validate();
  if (design.ld_rows < 0 || design.hd_rows < 0) throw std::invalid_argument("row counts must be non-negative");
  if (design.tiles_per_row < 1) throw std::invalid_argument("tiles_per_row must be >= 1");

  const int domains = r.power_domains;
  const int per_domain = r.lineups_per_domain();
  const RowQuanta q = row_quanta(r);

  auto check_class = [&](int rows, int quantum, const char* label) {
    if (rows == 0) return;
    if (quantum <= 0)
      throw std::invalid_argument(std::string(label) + " rows need more line-ups per power domain");
    if (rows % domains != 0 || (rows / domains) % quantum != 0)
      throw std::invalid_argument(std::string(label) + " row count " + std::to_string(rows) +
                                  " is not a balanced multiple of " + std::to_string(quantum * domains));
  };
  check_class(design.ld_rows, q.low_density, "low-density");
  check_class(design.hd_rows, q.high_density, "high-density");

  Hall hall;
  hall.design_ = design;
  const int lineup_count = r.total_lineups();

  HierarchyNode root;
  root.id = 0;
  root.kind = NodeKind::Substation;
  hall.nodes_.push_back(root);

  // Line-ups, domain-major.  In block designs each domain lists primaries
  // before its reserves.
  const int primaries_per_domain = r.is_block() ? r.n_primary / domains : per_domain;
  for (int d = 0; d < domains; ++d) {
    for (int j = 0; j < per_domain; ++j) {
      HierarchyNode lu;
      lu.id = hall.nodes_.size();
      lu.kind = NodeKind::LineUp;
      lu.rated = {design.lineup_rating_kw, 0.0, 0.0, 0.0};
      lu.domain = d;
      lu.reserve = r.is_block() && j >= primaries_per_domain;
      hall.nodes_[0].children.push_back(lu.id);
      hall.lineups_.push_back(lu.id);
      if (!lu.reserve) hall.active_.push_back(lu.id);
      hall.nodes_.push_back(std::move(lu));
    }
  }
  hall.rows_by_lineup_.assign(lineup_count, {});

  auto lineup_id = [&](int domain, int j) { return static_cast<std::size_t>(1 + domain * per_domain + j); };

  auto add_rows = [&](RowClass cls, int total) {
    if (total == 0) return;
    const int per_dom = total / domains;
    const int feeds = cls == RowClass::HighDensity ? 4 : 2;
    const auto combos = r.is_block() ? std::vector<std::vector<int>>{} : detail::combinations(per_domain, feeds);
    for (int d = 0; d < domains; ++d) {
      for (int i = 0; i < per_dom; ++i) {
        HierarchyNode row;
        row.id = hall.nodes_.size();
        row.kind = NodeKind::Row;
        row.row_class = cls;
        row.rated = design.row_capacity(cls);
        row.domain = d;
        row.position = hall.rows_.size();
        // Rows sharing a feed set sit next to each other.
        if (r.is_block()) {
          row.feeds.push_back(lineup_id(d, i / (per_dom / primaries_per_domain)));
          for (int j = primaries_per_domain; j < per_domain; ++j) row.standby.push_back(lineup_id(d, j));
        } else {
          const int group = per_dom / static_cast<int>(combos.size());
          for (int j : combos[i / group]) row.feeds.push_back(lineup_id(d, j));
        }
        for (std::size_t f : row.feeds) {
          hall.nodes_[f].children.push_back(row.id);
          hall.rows_by_lineup_[f - 1].push_back(row.id);
        }
        hall.rows_.push_back(row.id);
        hall.nodes_.push_back(std::move(row));
      }
    }
  };
  add_rows(RowClass::LowDensity, design.ld_rows);
  add_rows(RowClass::HighDensity, design.hd_rows);

  ResourceVector total{};
  for (std::size_t id : hall.lineups_) total.power += hall.nodes_[id].rated.power;
  for (std::size_t id : hall.rows_) {
    const auto& rr = hall.nodes_[id].rated;
    total.air += rr.air;
    total.liquid += rr.liquid;
    total.tiles += rr.tiles;
  }
  hall.nodes_[0].rated = total;
  return hall;
}

inline std::shared_ptr<const Hall> make_hall(const HallDesign& design) {
  return std::make_shared<const Hall>(build_hall(design));
}

}  // namespace dcsim
