#pragma once

// Local traces: per-thread swimlanes of configurations plus the cross-thread
// dependencies (create, mutex order, once order, join) that make up a
// partially ordered, thread-local view of an execution.

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "digestrace/program.hpp"

namespace digestrace {

/// One step of a concrete creation history: the create edge and how many
/// times the creator had already executed it.
struct CreateTag {
  EdgeId edge = 0;
  std::uint32_t ordinal = 0;
  auto operator<=>(const CreateTag&) const = default;
};

/// Concrete thread id. Main has the empty path.
using InstanceId = std::vector<CreateTag>;

/// Configuration `seq` of a lane, i.e. the state after `seq` actions.
struct ConfigRef {
  InstanceId inst;
  std::uint32_t seq = 0;
  auto operator<=>(const ConfigRef&) const = default;
};

struct TraceStep {
  EdgeId edge = 0;
  std::optional<ConfigRef> observed;  // set for observing actions
  auto operator<=>(const TraceStep&) const = default;
};

struct Lane {
  InstanceId id;
  std::optional<ConfigRef> parent;  // creator configuration before the create
  std::vector<TraceStep> steps;
  auto operator<=>(const Lane&) const = default;
};

enum class DepLabel : std::uint8_t { Create, Mutex, Once, Join };

struct LocalTrace {
  std::vector<Lane> lanes;  // sorted by id
  InstanceId ego;

  bool operator==(const LocalTrace&) const = default;

  const Lane* find(const InstanceId& id) const {
    auto it = std::lower_bound(lanes.begin(), lanes.end(), id,
                               [](const Lane& l, const InstanceId& i) { return l.id < i; });
    return it != lanes.end() && it->id == id ? &*it : nullptr;
  }
  Lane* find(const InstanceId& id) {
    return const_cast<Lane*>(static_cast<const LocalTrace&>(*this).find(id));
  }
  std::size_t index_of(const InstanceId& id) const {
    auto it = std::lower_bound(lanes.begin(), lanes.end(), id,
                               [](const Lane& l, const InstanceId& i) { return l.id < i; });
    return static_cast<std::size_t>(it - lanes.begin());
  }
  const Lane& ego_lane() const { return *find(ego); }
  ConfigRef last_config() const {
    return {ego, static_cast<std::uint32_t>(ego_lane().steps.size())};
  }
  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& l : lanes) n += l.steps.size();
    return n;
  }

  /// Canonical serialization, equal iff the traces are equal.
  std::string key() const {
    std::string k;
    auto put_id = [&](const InstanceId& id) {
      k += '[';
      for (const auto& t : id) {
        k += std::to_string(t.edge);
        k += '.';
        k += std::to_string(t.ordinal);
        k += ',';
      }
      k += ']';
    };
    auto put_ref = [&](const ConfigRef& r) {
      put_id(r.inst);
      k += '@';
      k += std::to_string(r.seq);
    };
    k += "ego";
    put_id(ego);
    for (const auto& l : lanes) {
      k += '|';
      put_id(l.id);
      if (l.parent) {
        k += '<';
        put_ref(*l.parent);
      }
      k += ':';
      for (const auto& s : l.steps) {
        k += std::to_string(s.edge);
        if (s.observed) {
          k += '^';
          put_ref(*s.observed);
        }
        k += ';';
      }
    }
    return k;
  }
};

inline std::string instance_name(const Program& p, const InstanceId& id) {
  std::string s = std::string(kMainLabel);
  for (const auto& t : id) {
    const auto& a = p.edges.at(t.edge).action;
    s += "/" + a.target + "#" + a.aux;
    if (t.ordinal) s += "." + std::to_string(t.ordinal);
  }
  return s;
}

inline const ThreadPrototype& lane_prototype(const Program& p, const InstanceId& id) {
  if (id.empty()) return p.main();
  return p.prototype(p.edges.at(id.back().edge).action.target);
}

inline NodeId lane_node(const Program& p, const Lane& l) {
  if (l.steps.empty()) return lane_prototype(p, l.id).start;
  return p.edges.at(l.steps.back().edge).target;
}

/// Synchronization object touched by an action ("m:a" for mutexes, "o:x" for
/// once variables), empty when none.
inline std::string sync_object(const Action& a) {
  switch (a.kind) {
    case ActionKind::Init:
    case ActionKind::Lock:
    case ActionKind::Unlock:
      return "m:" + a.target;
    case ActionKind::InitO:
    case ActionKind::StartO:
    case ActionKind::EndO:
      return "o:" + a.target;
    default:
      return {};
  }
}

inline DepLabel dep_label(const Action& observing) {
  switch (observing.kind) {
    case ActionKind::Lock: return DepLabel::Mutex;
    case ActionKind::StartO: return DepLabel::Once;
    default: return DepLabel::Join;
  }
}

/// Per-lane prefix lengths (-1 = lane absent) of the causal past of `from`.
/// When `ignore_mutex` is set, dependencies created by locking that mutex are
/// not followed.
inline std::vector<int> causal_past(const Program& p, const std::vector<Lane>& lanes, const ConfigRef& from,
                                    const std::string* ignore_mutex = nullptr) {
  std::vector<int> len(lanes.size(), -1);
  auto index_of = [&](const InstanceId& id) {
    auto it = std::lower_bound(lanes.begin(), lanes.end(), id,
                               [](const Lane& l, const InstanceId& i) { return l.id < i; });
    return static_cast<std::size_t>(it - lanes.begin());
  };
  std::vector<std::pair<std::size_t, int>> work{{index_of(from.inst), static_cast<int>(from.seq)}};
  while (!work.empty()) {
    auto [li, seq] = work.back();
    work.pop_back();
    int old = len[li];
    if (seq <= old) continue;
    len[li] = seq;
    const Lane& l = lanes[li];
    if (old < 0 && l.parent) work.emplace_back(index_of(l.parent->inst), static_cast<int>(l.parent->seq));
    for (int s = std::max(old, 0); s < seq; ++s) {
      const auto& st = l.steps[static_cast<std::size_t>(s)];
      if (!st.observed) continue;
      if (ignore_mutex) {
        const auto& a = p.edges[st.edge].action;
        if (a.kind == ActionKind::Lock && a.target == *ignore_mutex) continue;
      }
      work.emplace_back(index_of(st.observed->inst), static_cast<int>(st.observed->seq));
    }
  }
  return len;
}

/// The local trace of configuration `c`: its causal past with `c`'s thread as ego.
inline LocalTrace past_trace(const Program& p, const std::vector<Lane>& lanes, const ConfigRef& c) {
  auto len = causal_past(p, lanes, c);
  LocalTrace t;
  t.ego = c.inst;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (len[i] < 0) continue;
    Lane l = lanes[i];
    l.steps.resize(static_cast<std::size_t>(len[i]));
    t.lanes.push_back(std::move(l));
  }
  return t;
}

inline LocalTrace initial_trace() {
  LocalTrace t;
  t.lanes.push_back(Lane{});
  return t;
}

namespace detail {

inline bool lane_holds(const Program& p, const Lane& l, const std::string& object) {
  for (auto it = l.steps.rbegin(); it != l.steps.rend(); ++it) {
    const auto& a = p.edges[it->edge].action;
    if (sync_object(a) != object) continue;
    return a.kind == ActionKind::Lock || a.kind == ActionKind::StartO;
  }
  return false;
}

inline bool trace_has(const Program& p, const LocalTrace& t, ActionKind kind, const std::string& target) {
  for (const auto& l : t.lanes)
    for (const auto& s : l.steps) {
      const auto& a = p.edges[s.edge].action;
      if (a.kind == kind && a.target == target) return true;
    }
  return false;
}

inline std::uint32_t count_edge(const Lane& l, EdgeId e) {
  std::uint32_t n = 0;
  for (const auto& s : l.steps) n += s.edge == e;
  return n;
}

/// Union of two local traces that agree on their shared past.
inline std::optional<std::vector<Lane>> merge_lanes(const std::vector<Lane>& a, const std::vector<Lane>& b) {
  std::vector<Lane> out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].id < b[j].id)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].id < a[i].id) {
      out.push_back(b[j++]);
    } else {
      const Lane& x = a[i++];
      const Lane& y = b[j++];
      if (x.parent != y.parent) return std::nullopt;
      const Lane& longer = x.steps.size() >= y.steps.size() ? x : y;
      const Lane& shorter = x.steps.size() >= y.steps.size() ? y : x;
      if (!std::equal(shorter.steps.begin(), shorter.steps.end(), longer.steps.begin())) return std::nullopt;
      out.push_back(longer);
    }
  }
  return out;
}

}  // namespace detail

/// Prolongs `t` along a non-observing edge. Empty when the ego is not at the
/// edge's source or the action is impossible in `t`.
inline std::optional<LocalTrace> trace_step_local(const Program& p, EdgeId edge, const LocalTrace& t) {
  const Edge& e = p.edges.at(edge);
  const Lane& ego = t.ego_lane();
  if (e.action.is_observing()) throw std::logic_error("trace_step_local on an observing action");
  if (lane_node(p, ego) != e.source) return std::nullopt;
  const auto& a = e.action;
  switch (a.kind) {
    case ActionKind::Unlock:
    case ActionKind::EndO:
      if (!detail::lane_holds(p, ego, sync_object(a))) return std::nullopt;
      break;
    case ActionKind::Init:
    case ActionKind::InitO: {
      auto obj = sync_object(a);
      for (const auto& l : t.lanes)
        for (const auto& s : l.steps)
          if (sync_object(p.edges[s.edge].action) == obj) return std::nullopt;
      break;
    }
    case ActionKind::PosRan:
      if (!detail::trace_has(p, t, ActionKind::EndO, a.target)) return std::nullopt;
      break;
    case ActionKind::NegRan:
      if (detail::trace_has(p, t, ActionKind::EndO, a.target)) return std::nullopt;
      break;
    default:
      break;
  }
  LocalTrace r = t;
  r.find(r.ego)->steps.push_back({edge, std::nullopt});
  return r;
}

/// Prolongs `t0` along an observing edge, incorporating `t1`, which must end
/// in a matching observable action. Empty when the two traces are not
/// compatible.
inline std::optional<LocalTrace> trace_step_observing(const Program& p, EdgeId edge, const LocalTrace& t0,
                                                      const LocalTrace& t1) {
  const Edge& e = p.edges.at(edge);
  const auto& a = e.action;
  if (!a.is_observing()) throw std::logic_error("trace_step_observing on a non-observing action");
  const Lane& ego0 = t0.ego_lane();
  if (lane_node(p, ego0) != e.source) return std::nullopt;
  const Lane& obs_lane = t1.ego_lane();
  if (obs_lane.steps.empty()) return std::nullopt;
  const auto& last = p.edges[obs_lane.steps.back().edge].action;

  switch (a.kind) {
    case ActionKind::Lock:
      if (!((last.kind == ActionKind::Unlock || last.kind == ActionKind::Init) && last.target == a.target))
        return std::nullopt;
      break;
    case ActionKind::StartO:
      if (!((last.kind == ActionKind::EndO || last.kind == ActionKind::InitO) && last.target == a.target))
        return std::nullopt;
      break;
    case ActionKind::Join: {
      if (last.kind != ActionKind::ThreadExit) return std::nullopt;
      auto ce = p.create_edge(a.target);
      if (!ce) return std::nullopt;
      auto n = detail::count_edge(ego0, *ce);
      if (n == 0) return std::nullopt;
      InstanceId child = t0.ego;
      child.push_back({*ce, n - 1});
      if (t1.ego != child) return std::nullopt;
      break;
    }
    default:
      return std::nullopt;
  }

  auto merged = detail::merge_lanes(t0.lanes, t1.lanes);
  if (!merged) return std::nullopt;
  LocalTrace r{std::move(*merged), t0.ego};
  Lane& ego = *r.find(r.ego);
  if (ego.steps.size() != ego0.steps.size()) return std::nullopt;  // t1 knows the ego's future

  // the union must itself respect the per-object orders: one initialization,
  // and no release observed twice (including the one observed now)
  ConfigRef observed = t1.last_config();
  std::set<ConfigRef> observed_refs{observed};
  std::set<std::string> inits;
  for (const auto& l : r.lanes)
    for (const auto& s : l.steps) {
      if (s.observed && !observed_refs.insert(*s.observed).second) return std::nullopt;
      const auto& sa = p.edges[s.edge].action;
      if ((sa.kind == ActionKind::Init || sa.kind == ActionKind::InitO) && !inits.insert(sync_object(sa)).second)
        return std::nullopt;
    }

  if (a.kind != ActionKind::Join) {
    // every event on the object must precede the observed release
    auto obj = sync_object(a);
    for (const auto& l : r.lanes) {
      const Lane* known = t1.find(l.id);
      std::size_t from = known ? known->steps.size() : 0;
      for (std::size_t s = from; s < l.steps.size(); ++s)
        if (sync_object(p.edges[l.steps[s].edge].action) == obj) return std::nullopt;
    }
  }
  ego.steps.push_back({edge, std::move(observed)});
  return r;
}

/// Local trace of the thread created along `create_edge` from `t`.
inline std::optional<LocalTrace> spawn(const Program& p, const LocalTrace& t, EdgeId create_edge) {
  const Edge& e = p.edges.at(create_edge);
  if (e.action.kind != ActionKind::Create) return std::nullopt;
  const Lane& ego = t.ego_lane();
  if (lane_node(p, ego) != e.source) return std::nullopt;
  Lane child;
  child.id = t.ego;
  child.id.push_back({create_edge, detail::count_edge(ego, create_edge)});
  if (t.find(child.id)) return std::nullopt;
  child.parent = ConfigRef{t.ego, static_cast<std::uint32_t>(ego.steps.size())};
  LocalTrace r = t;
  r.ego = child.id;
  r.lanes.insert(r.lanes.begin() + static_cast<std::ptrdiff_t>(r.index_of(child.id)), std::move(child));
  return r;
}

/// Structural checks every local trace must pass: acyclic causality with the
/// ego's last configuration as unique maximum, and per-object total orders in
/// which each release is observed at most once.
inline std::optional<std::string> check_trace_invariants(const Program& p, const LocalTrace& t) {
  auto len = causal_past(p, t.lanes, t.last_config());
  for (std::size_t i = 0; i < t.lanes.size(); ++i)
    if (len[i] != static_cast<int>(t.lanes[i].steps.size()))
      return "configuration outside the past of the ego's last configuration";
  std::set<ConfigRef> seen_obs;
  for (const auto& l : t.lanes) {
    for (std::size_t s = 0; s < l.steps.size(); ++s) {
      const auto& st = l.steps[s];
      if (!st.observed) continue;
      if (!seen_obs.insert(*st.observed).second) return "release observed twice";
      const Lane* src = t.find(st.observed->inst);
      if (!src || st.observed->seq == 0 || st.observed->seq > src->steps.size())
        return "dependency from a missing configuration";
      // acyclicity: the observed configuration must not lie in this step's future
      auto back = causal_past(p, t.lanes, *st.observed);
      if (back[t.index_of(l.id)] > static_cast<int>(s)) return "cyclic causality";
    }
  }
  // each synchronization object: its events form a chain
  std::map<std::string, std::vector<ConfigRef>> events;
  for (const auto& l : t.lanes)
    for (std::size_t s = 0; s < l.steps.size(); ++s) {
      auto obj = sync_object(p.edges[l.steps[s].edge].action);
      if (!obj.empty()) events[obj].push_back({l.id, static_cast<std::uint32_t>(s + 1)});
    }
  for (const auto& [obj, evs] : events) {
    for (std::size_t i = 0; i < evs.size(); ++i)
      for (std::size_t j = i + 1; j < evs.size(); ++j) {
        auto pi = causal_past(p, t.lanes, evs[i]);
        auto pj = causal_past(p, t.lanes, evs[j]);
        bool i_before_j = pj[t.index_of(evs[i].inst)] >= static_cast<int>(evs[i].seq);
        bool j_before_i = pi[t.index_of(evs[j].inst)] >= static_cast<int>(evs[j].seq);
        if (!i_before_j && !j_before_i) return "unordered events on " + obj;
      }
  }
  return std::nullopt;
}

}  // namespace digestrace
