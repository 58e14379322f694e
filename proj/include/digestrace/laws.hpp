#pragma once

// Executable digest laws, checked against the step relation recorded by the
// bounded enumeration.

#include <set>
#include <string>
#include <vector>

#include "digestrace/digest.hpp"
#include "digestrace/instrument.hpp"
#include "digestrace/oracle.hpp"

namespace digestrace {

struct LawViolation {
  std::string law;  // simulation, determinism, creation, creation-defined, initialization, access-stability
  std::string detail;
};

struct LawReport {
  std::string digest;
  std::size_t checked = 0;
  std::vector<LawViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Abstraction of every trace in the set, by trace index.
inline std::vector<AnyElement> abstract_all(const AnyDigest& d, const Program& p, const TraceSet& ts) {
  std::vector<AnyElement> out;
  out.reserve(ts.traces.size());
  for (const auto& t : ts.traces) out.push_back(d.abstract_trace(p, t));
  return out;
}

namespace detail {

inline std::string show(const std::optional<AnyElement>& e) { return e ? e->str() : "{}"; }

inline void add_violation(LawReport& r, std::string law, std::string detail) {
  constexpr std::size_t kMaxReported = 50;
  if (r.violations.size() < kMaxReported) r.violations.push_back({std::move(law), std::move(detail)});
}

}  // namespace detail

inline LawReport check_admissibility(const AnyDigest& d, const Program& p, const TraceSet& ts) {
  LawReport r{d.name(), 0, {}};
  auto alpha = abstract_all(d, p, ts);

  // initialization: the initial digests are exactly the abstraction of the initial trace
  {
    ++r.checked;
    auto init = d.init_digests();
    auto a0 = d.abstract_trace(p, initial_trace());
    if (init.size() != 1 || !(init.front() == a0)) {
      std::string got;
      for (const auto& e : init) got += e.str() + " ";
      detail::add_violation(r, "initialization", "init digests {" + got + "} != {" + a0.str() + "}");
    }
  }

  for (const auto& s : ts.steps) {
    const Edge& e = p.edges[s.edge];
    const auto& a0 = alpha[s.from];
    const auto& want = alpha[s.result];
    std::optional<AnyElement> got, again;
    std::string law = "simulation";
    switch (s.kind) {
      case RecordedStep::Kind::Local:
        got = d.step_local(e.action, a0);
        again = d.step_local(e.action, a0);
        break;
      case RecordedStep::Kind::Observing:
        got = d.step_observing(e.action, a0, alpha[s.observed]);
        again = d.step_observing(e.action, a0, alpha[s.observed]);
        break;
      case RecordedStep::Kind::Spawn:
        law = "creation";
        got = d.new_digest(a0, e.action);
        again = d.new_digest(a0, e.action);
        break;
    }
    ++r.checked;
    if (got.has_value() != again.has_value() || (got && !(*got == *again)))
      detail::add_violation(r, "determinism", "'" + e.action.str() + "' is not a function of its inputs");
    if (!got || !(*got == want)) {
      std::string in = a0.str();
      if (s.kind == RecordedStep::Kind::Observing) in += ", " + alpha[s.observed].str();
      detail::add_violation(r, law,
                            "line " + std::to_string(e.line) + " '" + e.action.str() + "' from " + in + ": expected " +
                                want.str() + ", transfer gives " + detail::show(got));
    }
  }

  // a defined create step implies a digest for the new thread
  std::set<std::pair<EdgeId, std::string>> seen;
  for (std::size_t i = 0; i < ts.traces.size(); ++i) {
    NodeId u = lane_node(p, ts.traces[i].ego_lane());
    for (EdgeId eid : p.out_edges(u)) {
      const auto& a = p.edges[eid].action;
      if (a.kind != ActionKind::Create) continue;
      if (!seen.emplace(eid, alpha[i].str()).second) continue;
      ++r.checked;
      if (d.step_local(a, alpha[i]) && !d.new_digest(alpha[i], a))
        detail::add_violation(r, "creation-defined", "'" + a.str() + "' from " + alpha[i].str() + " has no child digest");
    }
  }
  return r;
}

/// Every access sequence of the program, run from any two realized digests,
/// yields nothing or its first argument.
inline LawReport check_access_stability(const AnyDigest& d, const Program& p, const TraceSet& ts) {
  LawReport r{d.name(), 0, {}};
  std::vector<AnyElement> realized;
  {
    std::set<std::string> keys;
    for (auto& a : abstract_all(d, p, ts))
      if (keys.insert(a.str()).second) realized.push_back(std::move(a));
  }
  std::set<std::pair<std::string, AccessType>> kinds;
  for (const auto& site : access_sites(p)) {
    if (!kinds.emplace(site.global, site.type).second) continue;  // sequences depend only on (g, type)
    auto seq = access_sequence(p, site.edge);
    const auto& lock = p.edges[seq.lock].action;
    const auto& acc = p.edges[seq.access].action;
    const auto& unlock = p.edges[seq.unlock].action;
    for (const auto& a0 : realized)
      for (const auto& a1 : realized) {
        ++r.checked;
        auto x = d.step_observing(lock, a0, a1);
        if (x) x = d.step_local(acc, *x);
        if (x) x = d.step_local(unlock, *x);
        if (x && !(*x == a0))
          detail::add_violation(r, "access-stability",
                                "'" + acc.str() + "' sequence from " + a0.str() + " observing " + a1.str() +
                                    " yields " + x->str());
      }
  }
  return r;
}

}  // namespace digestrace
