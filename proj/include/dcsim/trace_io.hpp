#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dcsim/arrivals.hpp"
#include "dcsim/config.hpp"

namespace dcsim {

/// Malformed trace input; `line` is 1-based.
struct TraceParseError : std::runtime_error {
  int line = 0;
  TraceParseError(int ln, const std::string& msg)
      : std::runtime_error("trace line " + std::to_string(ln) + ": " + msg), line(ln) {}
};

/// What a trace file carries besides the events: enough to rebuild the run.
struct TraceHeader {
  std::uint64_t seed = 0;
  int horizon = 0;
  int start_year = 2026;
  Scenario scenario = Scenario::High;
  int pod_size = 1;
  json config;
};

inline json deployment_json(const Deployment& d) {
  return {{"type", "deployment"},
          {"id", d.id},
          {"class", std::string(to_string(d.cls))},
          {"sku_kw", d.sku_power},
          {"demand", {d.demand.power, d.demand.air, d.demand.liquid, d.demand.tiles}},
          {"tier", d.tier == Tier::HA ? "HA" : "LA"},
          {"feeds", d.feeds},
          {"quantum", d.quantum},
          {"pod_racks", d.pod_racks},
          {"arrival", d.arrival},
          {"lifetime", d.lifetime},
          {"harvest_month", d.harvest_month},
          {"harvest_fraction", d.harvest_fraction}};
}

inline void write_trace(std::ostream& os, const Trace& t, const TraceHeader& h) {
  json head = {{"type", "header"},
               {"format", "dcsim-trace/1"},
               {"seed", h.seed},
               {"horizon", t.horizon},
               {"start_year", t.start_year},
               {"scenario", std::string(to_string(h.scenario))},
               {"pod_size", h.pod_size},
               {"deployments", t.deployments.size()},
               {"events", t.events.size()},
               {"config", h.config}};
  os << head.dump() << '\n';
  for (const auto& d : t.deployments) os << deployment_json(d).dump() << '\n';
  for (const auto& e : t.events)
    os << json{{"type", "event"}, {"month", e.month}, {"kind", std::string(to_string(e.kind))}, {"id", e.deployment}}
              .dump()
       << '\n';
}

/// Hash of the deployment and event stream (header excluded).
inline std::string trace_digest(const Trace& t) {
  std::ostringstream os;
  for (const auto& d : t.deployments) os << deployment_json(d).dump() << '\n';
  for (const auto& e : t.events) os << e.month << ' ' << static_cast<int>(e.kind) << ' ' << e.deployment << '\n';
  return hex64(fnv1a(os.str()));
}

namespace detail {

inline EventKind parse_event_kind(const std::string& s) {
  if (s == "deploy") return EventKind::Deploy;
  if (s == "harvest") return EventKind::Harvest;
  if (s == "decommission") return EventKind::Decommission;
  throw std::invalid_argument("unknown event kind: " + s);
}

inline Deployment parse_deployment(const json& j) {
  Deployment d;
  d.id = j.at("id").get<std::uint64_t>();
  d.cls = parse_rack_class(j.at("class").get<std::string>());
  d.sku_power = j.at("sku_kw").get<double>();
  const auto v = j.at("demand").get<std::vector<double>>();
  if (v.size() != 4) throw std::invalid_argument("demand needs 4 entries");
  d.demand = {v[0], v[1], v[2], v[3]};
  const auto tier = j.at("tier").get<std::string>();
  if (tier != "HA" && tier != "LA") throw std::invalid_argument("tier must be HA or LA");
  d.tier = tier == "HA" ? Tier::HA : Tier::LA;
  d.feeds = j.at("feeds").get<int>();
  d.quantum = j.at("quantum").get<int>();
  d.pod_racks = j.at("pod_racks").get<int>();
  d.arrival = j.at("arrival").get<int>();
  d.lifetime = j.at("lifetime").get<int>();
  d.harvest_month = j.at("harvest_month").get<int>();
  d.harvest_fraction = j.at("harvest_fraction").get<double>();
  return d;
}

}  // namespace detail

/// Reads a trace written by write_trace.  Errors name the offending line.
inline Trace read_trace(std::istream& is, TraceHeader* header = nullptr) {
  Trace t;
  TraceHeader h;
  std::string line;
  int ln = 0;
  bool have_header = false;
  std::size_t want_deps = 0, want_events = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceParseError(ln, std::string("invalid JSON: ") + e.what());
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw std::invalid_argument("first record must be the header");
        if (j.value("format", "") != "dcsim-trace/1") throw std::invalid_argument("unsupported trace format");
        h.seed = j.at("seed").get<std::uint64_t>();
        h.horizon = j.at("horizon").get<int>();
        h.start_year = j.at("start_year").get<int>();
        h.scenario = parse_scenario(j.at("scenario").get<std::string>());
        h.pod_size = j.at("pod_size").get<int>();
        h.config = j.at("config");
        want_deps = j.at("deployments").get<std::size_t>();
        want_events = j.at("events").get<std::size_t>();
        t.seed = h.seed;
        t.horizon = h.horizon;
        t.start_year = h.start_year;
        have_header = true;
      } else if (type == "deployment") {
        Deployment d = detail::parse_deployment(j);
        if (d.id != t.deployments.size()) throw std::invalid_argument("deployment ids must be dense and ordered");
        t.deployments.push_back(d);
      } else if (type == "event") {
        TraceEvent e;
        e.month = j.at("month").get<int>();
        e.kind = detail::parse_event_kind(j.at("kind").get<std::string>());
        e.deployment = j.at("id").get<std::uint64_t>();
        if (e.deployment >= t.deployments.size()) throw std::invalid_argument("event refers to unknown deployment");
        if (!t.events.empty() && e < t.events.back()) throw std::invalid_argument("events out of order");
        t.events.push_back(e);
      } else {
        throw std::invalid_argument("unknown record type: " + type);
      }
    } catch (const TraceParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw TraceParseError(ln, e.what());
    }
  }
  if (!have_header) throw TraceParseError(ln + 1, "missing header");
  if (t.deployments.size() != want_deps || t.events.size() != want_events)
    throw TraceParseError(ln + 1, "truncated trace: expected " + std::to_string(want_deps) + " deployments and " +
                                      std::to_string(want_events) + " events, got " +
                                      std::to_string(t.deployments.size()) + " and " +
                                      std::to_string(t.events.size()));
  if (header) *header = h;
  return t;
}

}  // namespace dcsim
