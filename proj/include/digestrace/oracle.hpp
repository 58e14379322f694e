#pragma once

// Bounded concrete semantics: enumerates the local traces of a program by
// exploring global executions up to a step and thread bound, then derives
// racy access pairs from them.

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "digestrace/instrument.hpp"
#include "digestrace/printer.hpp"
#include "digestrace/trace.hpp"

namespace digestrace {

struct OracleBounds {
  std::size_t depth = 40;            // total actions per execution
  std::size_t width = 4;             // thread instances per execution
  std::size_t max_states = 2000000;  // explored executions
};

inline constexpr std::uint32_t kNoTrace = std::numeric_limits<std::uint32_t>::max();

/// One application of a semantic step function, by trace index.
struct RecordedStep {
  enum class Kind : std::uint8_t { Local, Observing, Spawn };
  Kind kind = Kind::Local;
  EdgeId edge = 0;
  std::uint32_t from = 0;
  std::uint32_t observed = kNoTrace;
  std::uint32_t result = 0;
  auto operator<=>(const RecordedStep&) const = default;
};

struct TraceSet {
  std::vector<LocalTrace> traces;
  std::vector<RecordedStep> steps;
  bool bound_exceeded = false;
  std::size_t executions = 0;

  std::uint32_t add(LocalTrace t) {
    auto k = t.key();
    auto [it, fresh] = index_.emplace(std::move(k), static_cast<std::uint32_t>(traces.size()));
    if (fresh) traces.push_back(std::move(t));
    return it->second;
  }
  std::optional<std::uint32_t> find(const LocalTrace& t) const {
    auto it = index_.find(t.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  void record(RecordedStep s) {
    if (step_index_.insert(std::make_tuple(s.kind, s.edge, s.from, s.observed, s.result)).second) steps.push_back(s);
  }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::set<std::tuple<RecordedStep::Kind, EdgeId, std::uint32_t, std::uint32_t, std::uint32_t>> step_index_;
};

namespace detail {

struct Execution {
  std::vector<Lane> lanes;
  std::map<std::string, ConfigRef> last_sync;  // latest event per object
  std::size_t steps = 0;

  std::string key() const {
    LocalTrace t{lanes, {}};
    return t.key();
  }
  std::size_t index_of(const InstanceId& id) const {
    auto it = std::lower_bound(lanes.begin(), lanes.end(), id,
                               [](const Lane& l, const InstanceId& i) { return l.id < i; });
    return static_cast<std::size_t>(it - lanes.begin());
  }
  const Lane* find(const InstanceId& id) const {
    auto i = index_of(id);
    return i < lanes.size() && lanes[i].id == id ? &lanes[i] : nullptr;
  }
};

class Enumerator {
 public:
  Enumerator(const Program& p, OracleBounds b) : p_(p), bounds_(b) {}

  TraceSet run() {
    Execution init;
    init.lanes.push_back(Lane{});
    out_.add(initial_trace());
    seen_.insert(init.key());
    explore(init);
    out_.executions = seen_.size();
    return std::move(out_);
  }

 private:
  const Program& p_;
  OracleBounds bounds_;
  TraceSet out_;
  std::unordered_set<std::string> seen_;

  void explore(const Execution& x) {
    for (std::size_t li = 0; li < x.lanes.size(); ++li) {
      const Lane& lane = x.lanes[li];
      NodeId u = lane_node(p_, lane);
      const auto& outs = p_.out_edges(u);
      if (outs.empty()) continue;
      ConfigRef cur{lane.id, static_cast<std::uint32_t>(lane.steps.size())};
      std::optional<LocalTrace> t0;
      for (EdgeId e : outs) {
        const auto& a = p_.edges[e].action;
        if (!t0) t0 = past_trace(p_, x.lanes, cur);
        std::uint32_t from = out_.add(*t0);
        std::optional<LocalTrace> r;
        std::optional<LocalTrace> child;
        std::optional<ConfigRef> observed;
        std::uint32_t obs_index = kNoTrace;

        if (a.is_observing()) {
          observed = observable_for(x, lane, a);
          if (!observed) continue;
          LocalTrace t1 = past_trace(p_, x.lanes, *observed);
          r = trace_step_observing(p_, e, *t0, t1);
          if (r) obs_index = out_.add(std::move(t1));
        } else {
          if ((a.kind == ActionKind::Init || a.kind == ActionKind::InitO) && x.last_sync.count(sync_object(a)))
            continue;
          r = trace_step_local(p_, e, *t0);
          if (r && a.kind == ActionKind::Create) {
            if (x.lanes.size() >= bounds_.width) {
              out_.bound_exceeded = true;
              continue;
            }
            child = spawn(p_, *t0, e);
            if (!child) throw std::logic_error("spawn failed on an enabled create");
          }
        }
        if (!r) continue;
        if (x.steps >= bounds_.depth) {
          out_.bound_exceeded = true;
          continue;
        }

        Execution y = x;
        Lane& ly = y.lanes[li];
        ly.steps.push_back({e, observed});
        ++y.steps;
        auto obj = sync_object(a);
        if (!obj.empty()) y.last_sync[obj] = ConfigRef{ly.id, static_cast<std::uint32_t>(ly.steps.size())};
        if (child) {
          Lane cl = child->ego_lane();
          y.lanes.insert(y.lanes.begin() + static_cast<std::ptrdiff_t>(y.index_of(cl.id)), std::move(cl));
        }

        std::uint32_t res = out_.add(std::move(*r));
        out_.record({a.is_observing() ? RecordedStep::Kind::Observing : RecordedStep::Kind::Local, e, from,
                     obs_index, res});
        if (child) {
          std::uint32_t ci = out_.add(std::move(*child));
          out_.record({RecordedStep::Kind::Spawn, e, from, kNoTrace, ci});
        }

        if (seen_.size() >= bounds_.max_states) {
          out_.bound_exceeded = true;
          continue;
        }
        if (!seen_.insert(y.key()).second) continue;
        explore(y);
      }
    }
  }

  /// The configuration an observing action of `lane` would observe now.
  std::optional<ConfigRef> observable_for(const Execution& x, const Lane& lane, const Action& a) const {
    if (a.kind == ActionKind::Join) {
      auto ce = p_.create_edge(a.target);
      if (!ce) return std::nullopt;
      auto n = detail::count_edge(lane, *ce);
      if (n == 0) return std::nullopt;
      InstanceId child = lane.id;
      child.push_back({*ce, n - 1});
      const Lane* cl = x.find(child);
      if (!cl || cl->steps.empty() || p_.edges[cl->steps.back().edge].action.kind != ActionKind::ThreadExit)
        return std::nullopt;
      return ConfigRef{child, static_cast<std::uint32_t>(cl->steps.size())};
    }
    auto it = x.last_sync.find(sync_object(a));
    if (it == x.last_sync.end()) return std::nullopt;
    const Lane* l = x.find(it->second.inst);
    auto k = p_.edges[l->steps[it->second.seq - 1].edge].action.kind;
    if (k == ActionKind::Lock || k == ActionKind::StartO) return std::nullopt;
    return it->second;
  }
};

}  // namespace detail

/// All local traces reachable within the bounds, with the step relation
/// between them.
inline TraceSet enumerate_traces(const Program& p, OracleBounds bounds = {}) {
  return detail::Enumerator(p, bounds).run();
}

struct RacyPair {
  EdgeId a = 0;  // access edges, a <= b
  EdgeId b = 0;
  std::string global;
  std::uint32_t witness = 0;  // trace index
};

/// Access pairs on the same global, at least one a write, that are unordered
/// once the dependencies through the global's atomicity mutex are dropped.
inline std::vector<RacyPair> find_racy_pairs(const Program& p, const TraceSet& ts) {
  std::map<std::pair<EdgeId, EdgeId>, RacyPair> found;
  struct Ev {
    std::size_t lane;
    std::uint32_t seq;  // post configuration
    EdgeId edge;
  };
  for (std::uint32_t ti = 0; ti < ts.traces.size(); ++ti) {
    const auto& t = ts.traces[ti];
    std::vector<Ev> evs;
    for (std::size_t li = 0; li < t.lanes.size(); ++li)
      for (std::size_t s = 0; s < t.lanes[li].steps.size(); ++s)
        if (p.edges[t.lanes[li].steps[s].edge].action.is_access())
          evs.push_back({li, static_cast<std::uint32_t>(s + 1), t.lanes[li].steps[s].edge});
    for (std::size_t i = 0; i < evs.size(); ++i) {
      for (std::size_t j = i + 1; j < evs.size(); ++j) {
        const auto& x = evs[i];
        const auto& y = evs[j];
        if (x.lane == y.lane) continue;
        const auto& ax = p.edges[x.edge].action;
        const auto& ay = p.edges[y.edge].action;
        if (ax.target != ay.target) continue;
        if (ax.access_type() != AccessType::W && ay.access_type() != AccessType::W) continue;
        auto key = std::minmax(x.edge, y.edge);
        if (found.count(key)) continue;
        auto m = Program::atomicity_mutex(ax.target);
        auto py = causal_past(p, t.lanes, {t.lanes[y.lane].id, y.seq}, &m);
        if (py[x.lane] >= static_cast<int>(x.seq)) continue;
        auto px = causal_past(p, t.lanes, {t.lanes[x.lane].id, x.seq}, &m);
        if (px[y.lane] >= static_cast<int>(y.seq)) continue;
        found.emplace(key, RacyPair{key.first, key.second, ax.target, ti});
      }
    }
  }
  std::vector<RacyPair> out;
  for (auto& [k, v] : found) out.push_back(std::move(v));
  return out;
}

namespace detail {

inline std::optional<LocalTrace> run_sequence(const Program& p, const AccessSequence& s, const LocalTrace& t,
                                              const LocalTrace& tl) {
  auto x = trace_step_observing(p, s.lock, t, tl);
  if (!x) return std::nullopt;
  x = trace_step_local(p, s.access, *x);
  if (!x) return std::nullopt;
  return trace_step_local(p, s.unlock, *x);
}

}  // namespace detail

/// Whether the instrumented accesses `a` and `b` can run their atomic
/// sections in either order after the same release of the atomicity mutex.
inline bool bidirectionally_compatible(const Program& p, const TraceSet& ts, EdgeId a, EdgeId b) {
  auto sa = access_sequence(p, a);
  auto sb = access_sequence(p, b);
  const auto& g = p.edges[a].action.target;
  if (p.edges[b].action.target != g) return false;
  auto m = Program::atomicity_mutex(g);
  NodeId na = p.edges[sa.lock].source;
  NodeId nb = p.edges[sb.lock].source;

  std::vector<const LocalTrace*> ta, tb, tl;
  for (const auto& t : ts.traces) {
    const Lane& ego = t.ego_lane();
    NodeId n = lane_node(p, ego);
    if (n == na) ta.push_back(&t);
    if (n == nb) tb.push_back(&t);
    if (!ego.steps.empty()) {
      const auto& act = p.edges[ego.steps.back().edge].action;
      if ((act.kind == ActionKind::Unlock || act.kind == ActionKind::Init) && act.target == m) tl.push_back(&t);
    }
  }
  for (const auto* l : tl) {
    std::vector<std::pair<const LocalTrace*, LocalTrace>> xa, xb;
    for (const auto* t : ta)
      if (auto x = detail::run_sequence(p, sa, *t, *l)) xa.emplace_back(t, std::move(*x));
    if (xa.empty()) continue;
    for (const auto* t : tb)
      if (auto x = detail::run_sequence(p, sb, *t, *l)) xb.emplace_back(t, std::move(*x));
    for (const auto& [t1, x1] : xa)
      for (const auto& [t2, x2] : xb)
        if (detail::run_sequence(p, sb, *t2, x1) && detail::run_sequence(p, sa, *t1, x2)) return true;
  }
  return false;
}

/// Graphviz swimlane rendering of a local trace.
inline std::string trace_to_dot(const Program& p, const LocalTrace& t) {
  std::string s = "digraph trace {\n  rankdir=LR;\n  node [shape=box, fontsize=10];\n";
  auto cfg = [&](const InstanceId& id, std::uint32_t seq) {
    return "\"" + dot_escape(instance_name(p, id)) + "@" + std::to_string(seq) + "\"";
  };
  for (const auto& l : t.lanes) {
    s += "  subgraph \"cluster_" + dot_escape(instance_name(p, l.id)) + "\" {\n    label=\"" +
         dot_escape(instance_name(p, l.id)) + (l.id == t.ego ? " (ego)" : "") + "\";\n";
    s += "    " + cfg(l.id, 0) + ";\n";
    for (std::size_t i = 0; i < l.steps.size(); ++i)
      s += "    " + cfg(l.id, static_cast<std::uint32_t>(i)) + " -> " + cfg(l.id, static_cast<std::uint32_t>(i + 1)) +
           " [label=\"" + dot_escape(p.edges[l.steps[i].edge].action.str()) + "\"];\n";
    s += "  }\n";
  }
  for (const auto& l : t.lanes) {
    if (l.parent) s += "  " + cfg(l.parent->inst, l.parent->seq) + " -> " + cfg(l.id, 0) + " [style=dashed, label=\"create\"];\n";
    for (std::size_t i = 0; i < l.steps.size(); ++i)
      if (const auto& o = l.steps[i].observed)
        s += "  " + cfg(o->inst, o->seq) + " -> " + cfg(l.id, static_cast<std::uint32_t>(i + 1)) + " [style=dotted];\n";
  }
  return s + "}\n";
}

}  // namespace digestrace
