#include <gtest/gtest.h>

#include <sstream>

#include "dcsim/simulation.hpp"
#include "dcsim/trace_io.hpp"

using namespace dcsim;

namespace {

struct Fixture {
  Config cfg = load_preset("smoke");
  TraceConfig tc = cfg.fleet_trace(Scenario::High, 3);
  Trace trace = generate_trace(tc, 5);
  TraceHeader header{5, trace.horizon, trace.start_year, Scenario::High, 3, config_to_json(cfg)};

  std::string text() const {
    std::ostringstream os;
    write_trace(os, trace, header);
    return os.str();
  }
};

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& l : v) s += l + "\n";
  return s;
}

}  // namespace

TEST(TraceIo, RoundTrip) {
  Fixture f;
  std::istringstream is(f.text());
  TraceHeader h;
  const Trace back = read_trace(is, &h);
  EXPECT_EQ(h.seed, 5u);
  EXPECT_EQ(h.pod_size, 3);
  EXPECT_EQ(h.scenario, Scenario::High);
  EXPECT_EQ(h.config, f.header.config);
  EXPECT_EQ(back.events, f.trace.events);
  ASSERT_EQ(back.deployments.size(), f.trace.deployments.size());
  EXPECT_EQ(trace_digest(back), trace_digest(f.trace));
  for (std::size_t i = 0; i < back.deployments.size(); ++i) {
    EXPECT_EQ(back.deployments[i].demand, f.trace.deployments[i].demand);
    EXPECT_EQ(back.deployments[i].lifetime, f.trace.deployments[i].lifetime);
  }
}

TEST(TraceIo, ReplayMatchesDirectRun) {
  Fixture f;
  std::istringstream is(f.text());
  TraceHeader h;
  const Trace back = read_trace(is, &h);
  const Config cfg = config_from_json(h.config);
  for (const auto& d : {design_3p1(), design_10n8()}) {
    const FleetResult a = fleet_sim({d}, f.trace, f.tc, {Policy::VarianceMin, 5});
    const FleetResult b = fleet_sim({d}, back, cfg.fleet_trace(h.scenario, h.pod_size), {Policy::VarianceMin, h.seed});
    EXPECT_EQ(a.halls_built, b.halls_built);
    EXPECT_EQ(a.deployed_mw, b.deployed_mw);
    EXPECT_EQ(a.final_p90, b.final_p90);
    ASSERT_EQ(a.series.size(), b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) EXPECT_EQ(a.series[i].stranded_p90, b.series[i].stranded_p90);
  }
}

TEST(TraceIo, SeedChangesDigest) {
  Fixture f;
  EXPECT_NE(trace_digest(generate_trace(f.tc, 6)), trace_digest(f.trace));
  EXPECT_EQ(trace_digest(generate_trace(f.tc, 5)), trace_digest(f.trace));
}

TEST(TraceIo, TruncatedFileNamesLine) {
  Fixture f;
  auto ls = lines_of(f.text());
  ls.resize(ls.size() - 3);
  std::istringstream is(join(ls));
  try {
    read_trace(is);
    FAIL() << "truncated trace accepted";
  } catch (const TraceParseError& e) {
    EXPECT_EQ(e.line, static_cast<int>(ls.size()) + 1);
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(TraceIo, CutMidLineNamesThatLine) {
  Fixture f;
  const std::string t = f.text();
  const auto ls = lines_of(t);
  std::string cut = join({ls[0], ls[1], ls[2]}) + ls[3].substr(0, ls[3].size() / 2);
  std::istringstream is(cut);
  try {
    read_trace(is);
    FAIL();
  } catch (const TraceParseError& e) {
    EXPECT_EQ(e.line, 4);
  }
}

TEST(TraceIo, MalformedRecords) {
  Fixture f;
  auto ls = lines_of(f.text());
  auto expect_line = [&](std::vector<std::string> v, int line) {
    std::istringstream is(join(v));
    try {
      read_trace(is);
      ADD_FAILURE() << "accepted";
    } catch (const TraceParseError& e) {
      EXPECT_EQ(e.line, line) << e.what();
    }
  };
  {
    auto v = ls;
    std::swap(v[0], v[1]);
    expect_line(v, 1);
  }
  {
    auto v = ls;
    v[2] = R"({"type":"deployment","id":99})";
    expect_line(v, 3);
  }
  {
    auto v = ls;
    const std::size_t first_event = f.trace.deployments.size() + 1;
    v[first_event] = R"({"type":"event","month":0,"kind":"explode","id":0})";
    expect_line(v, static_cast<int>(first_event) + 1);
  }
  {
    auto v = ls;
    v.back() = R"({"type":"event","month":0,"kind":"deploy","id":0})";
    expect_line(v, static_cast<int>(v.size()));
  }
  std::istringstream empty("");
  EXPECT_THROW(read_trace(empty), TraceParseError);
}
