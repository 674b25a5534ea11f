#include <gtest/gtest.h>

#include "dcsim/simulation.hpp"

using namespace dcsim;

namespace {

std::vector<std::size_t> hd_rows(const Hall& h) {
  std::vector<std::size_t> out;
  for (std::size_t r : h.rows())
    if (h.node(r).row_class == RowClass::HighDensity) out.push_back(r);
  return out;
}

// 10N/8 with every HD row holding one 450 kW rack: 18 MW in a 20 MW hall.
struct UniformHall {
  std::shared_ptr<const Hall> hall = make_hall(design_10n8());
  FleetState fs;
  UniformHall() {
    fs.open_hall(hall);
    std::uint64_t id = 0;
    for (std::size_t r : hd_rows(*hall)) {
      Deployment d = make_deployment(RackClass::GPU, 450);
      d.id = id++;
      auto plan = fs.halls[0].check(r, d);
      EXPECT_TRUE(plan.feasible) << plan.binding.describe();
      fs.active[d.id] = fs.halls[0].commit(r, d, plan);
    }
  }
};

}  // namespace

TEST(Placement, FailoverHeadroomFormula) {
  EXPECT_DOUBLE_EQ(failover_headroom(650, 4), 650.0 / 3.0);
  EXPECT_DOUBLE_EQ(failover_headroom(100, 2), 100.0);
  EXPECT_THROW(failover_headroom(1, 1), std::invalid_argument);
}

TEST(Placement, BlockLeftoverSawtooth) {
  EXPECT_DOUBLE_EQ(block_leftover(2500, 1250), 0.0);
  EXPECT_DOUBLE_EQ(block_leftover(2500, 1251), 1249.0 / 2500.0);
  EXPECT_DOUBLE_EQ(block_leftover(2500, 2500), 0.0);
  EXPECT_DOUBLE_EQ(block_leftover(2500, 2501), 1.0);
  EXPECT_DOUBLE_EQ(block_leftover(2500, 834), (2500.0 - 2 * 834) / 2500.0);
  EXPECT_THROW(block_leftover(0, 1), std::invalid_argument);
}

TEST(Placement, WorkedExampleRejectsDespiteSlack) {
  UniformHall u;
  const HallState& hs = u.fs.halls[0];
  for (std::size_t f : u.hall->lineups()) EXPECT_DOUBLE_EQ(hs.load(f).power, 1800.0);
  EXPECT_DOUBLE_EQ(hs.load(u.hall->root()).power, 18000.0);
  EXPECT_DOUBLE_EQ(u.hall->ha_capacity_kw() - hs.load(u.hall->root()).power, 2000.0);

  const Deployment big = make_deployment(RackClass::GPU, 650);
  for (std::size_t r : hd_rows(*u.hall)) {
    const auto res = hs.check(r, big);
    ASSERT_FALSE(res.feasible);
    EXPECT_EQ(res.binding.level, NodeKind::LineUp);
    EXPECT_DOUBLE_EQ(res.binding.headroom, 200.0);
    EXPECT_NEAR(res.binding.required, 216.6666666667, 1e-9);
  }
  EXPECT_NE(hs.check(hd_rows(*u.hall)[0], big).binding.describe().find("200 < 216.667"), std::string::npos);
  // 600 kW needs exactly 200 kW per survivor and fits.
  EXPECT_TRUE(hs.check(hd_rows(*u.hall)[0], make_deployment(RackClass::GPU, 600)).feasible);
}

TEST(Placement, LowAvailabilityUsesFullRating) {
  UniformHall u;
  const HallState& hs = u.fs.halls[0];
  const Deployment la = make_deployment(RackClass::GPU, 650, 1, Tier::LA);
  EXPECT_TRUE(hs.check(hd_rows(*u.hall)[0], la).feasible);
}

TEST(Placement, RowClassAndCooling) {
  auto hall = make_hall(design_4n3());
  HallState hs(hall, 0);
  const Deployment gpu = make_deployment(RackClass::GPU, 100);
  const Deployment cpu = make_deployment(RackClass::Compute, 20, 10);
  const std::size_t ld = hall->rows().front();
  const std::size_t hd = hall->rows().back();
  EXPECT_FALSE(hs.check(ld, gpu).feasible);
  EXPECT_TRUE(hs.check(hd, gpu).feasible);
  EXPECT_FALSE(hs.check(hd, cpu).feasible);
  EXPECT_TRUE(hs.check(ld, cpu).feasible);
  // 25 racks need 25 tiles; rows have 24.
  const auto res = hs.check(hd, make_deployment(RackClass::GPU, 10, 25));
  EXPECT_FALSE(res.feasible);
  EXPECT_EQ(res.binding.resource, Resource::Tiles);
  // HD rows carry 48 LPM; 2 LPM per GPU rack.
  HallDesign d = design_4n3();
  d.hd_row_liquid_lpm = 5;
  HallState hs2(make_hall(d), 0);
  const auto liq = hs2.check(hd, make_deployment(RackClass::GPU, 10, 3));
  EXPECT_FALSE(liq.feasible);
  EXPECT_EQ(liq.binding.resource, Resource::Liquid);
}

TEST(Placement, BlockRowUsesPrimaryOnly) {
  auto hall = make_hall(design_3p1());
  FleetState fs;
  fs.open_hall(hall);
  const std::size_t row = hd_rows(*hall)[0];
  Deployment d = make_deployment(RackClass::GPU, 1250);
  d.id = 0;
  auto p1 = fs.halls[0].check(row, d);
  ASSERT_TRUE(p1.feasible);
  fs.active[0] = fs.halls[0].commit(row, d, p1);
  const std::size_t primary = hall->node(row).feeds[0];
  EXPECT_DOUBLE_EQ(fs.halls[0].load(primary).power, 1250);
  for (std::size_t s : hall->node(row).standby) EXPECT_DOUBLE_EQ(fs.halls[0].load(s).power, 0);
  EXPECT_TRUE(p1.lineup_terms.size() == 1 && std::get<2>(p1.lineup_terms[0]) == 0.0);
  // A second 1250 kW rack fills the line-up exactly; a third on the same
  // line-up does not fit.
  d.id = 1;
  const std::size_t row2 = hd_rows(*hall)[1];
  ASSERT_EQ(hall->node(row2).feeds[0], primary);
  auto p2 = fs.halls[0].check(row2, d);
  ASSERT_TRUE(p2.feasible);
  fs.active[1] = fs.halls[0].commit(row2, d, p2);
  EXPECT_FALSE(fs.halls[0].check(row2, d).feasible);
  EXPECT_DOUBLE_EQ(fs.halls[0].lineup_fraction(primary), 1.0);
}

TEST(Placement, CrossRowDrawFromNeighbours) {
  HallDesign des = design_4n3();
  des.hd_row_rating_kw = 1000;
  auto hall = make_hall(des);
  FleetState fs;
  fs.open_hall(hall);
  const auto hd = hd_rows(*hall);
  Deployment pod = make_deployment(RackClass::GPU, 600, 4);  // 2400 kW
  pod.id = 0;
  const auto plan = fs.halls[0].check(hd[1], pod);
  ASSERT_TRUE(plan.feasible) << plan.binding.describe();
  ASSERT_EQ(plan.segments.size(), 3u);
  EXPECT_EQ(plan.segments[0], (Segment{hd[1], 1000}));
  EXPECT_EQ(plan.segments[1], (Segment{hd[0], 1000}));
  EXPECT_EQ(plan.segments[2], (Segment{hd[2], 400}));
  fs.active[0] = fs.halls[0].commit(hd[1], pod, plan);
  EXPECT_TRUE(fs.ledgers_consistent());
  EXPECT_TRUE(fs.within_capacity());
  // Tiles and cooling stay on the host row.
  EXPECT_DOUBLE_EQ(fs.halls[0].load(hd[1]).tiles, 4);
  EXPECT_DOUBLE_EQ(fs.halls[0].load(hd[0]).tiles, 0);
  // Too big even with both neighbours.
  Deployment huge = make_deployment(RackClass::GPU, 800, 4);
  EXPECT_FALSE(fs.halls[0].check(hd[3], huge).feasible);
}

TEST(Placement, LedgerStaysConsistentThroughChurn) {
  auto hall = make_hall(design_10n8());
  FleetState fs;
  fs.open_hall(hall);
  PolicyState ps;
  Rng rng(3);
  std::uniform_real_distribution<double> kw(20, 400);
  std::uint64_t id = 0;
  for (int step = 0; step < 600; ++step) {
    const int action = static_cast<int>(rng() % 10);
    if (action < 6 || fs.active.empty()) {
      Deployment d = step % 2 ? make_deployment(RackClass::GPU, kw(rng), 1 + static_cast<int>(rng() % 3))
                              : make_deployment(RackClass::Compute, kw(rng) / 20, 10);
      d.id = id++;
      place(Policy::VarianceMin, fs, d, ps);
    } else {
      auto it = fs.active.begin();
      std::advance(it, rng() % fs.active.size());
      if (action < 8) harvest(fs, it->first, 0.1);
      else decommission(fs, it->first);
    }
    ASSERT_TRUE(fs.ledgers_consistent()) << "step " << step;
    ASSERT_TRUE(fs.within_capacity()) << "step " << step;
  }
  EXPECT_GT(fs.active.size(), 10u);
  EXPECT_FALSE(decommission(fs, 1u << 30));
}

TEST(Placement, PoliciesPlaceWhenSomethingFits) {
  for (Policy p : kAllPolicies) {
    auto hall = make_hall(design_8p2());
    FleetState fs;
    fs.open_hall(hall);
    PolicyState ps;
    ps.rng = Rng(9);
    Deployment d = make_deployment(RackClass::GPU, 300);
    int placed = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
      d.id = i;
      if (place(p, fs, d, ps)) ++placed;
    }
    // 8 primaries x floor(2500 / 300) = 64 racks.
    EXPECT_EQ(placed, 64) << to_string(p);
  }
  EXPECT_EQ(parse_policy("MinWaste"), Policy::MinWaste);
  EXPECT_THROW(parse_policy("Best"), std::invalid_argument);
}

TEST(Placement, VarianceMinSpreadsLoad) {
  auto hall = make_hall(design_10n8());
  FleetState fs;
  fs.open_hall(hall);
  PolicyState ps;
  for (std::uint64_t i = 0; i < 10; ++i) {
    Deployment d = make_deployment(RackClass::GPU, 200);
    d.id = i;
    ASSERT_TRUE(place(Policy::VarianceMin, fs, d, ps));
  }
  // Ten 4-feed racks over two 5-line-up domains: every line-up gets 4 shares.
  for (std::size_t f : hall->lineups()) EXPECT_DOUBLE_EQ(fs.halls[0].load(f).power, 200.0);
}

TEST(Placement, HarvestReleasesPowerAndCooling) {
  auto hall = make_hall(design_4n3());
  FleetState fs;
  fs.open_hall(hall);
  PolicyState ps;
  Deployment d = make_deployment(RackClass::GPU, 1000);
  d.id = 4;
  ASSERT_TRUE(place(Policy::MinWaste, fs, d, ps));
  const std::size_t row = fs.active.at(4).row;
  ASSERT_TRUE(harvest(fs, 4, 0.1));
  EXPECT_DOUBLE_EQ(fs.halls[0].load(row).power, 900);
  EXPECT_DOUBLE_EQ(fs.halls[0].load(row).air, quantize(d.demand.air * 0.9));
  EXPECT_DOUBLE_EQ(fs.halls[0].load(row).tiles, 1);
  EXPECT_FALSE(harvest(fs, 4, 0.1));
  EXPECT_TRUE(fs.ledgers_consistent());
}
