#pragma once

// pthread_once: once variables the ego is currently running the routine for
// (active) and those whose routine has surely completed.

#include <set>
#include <string>

#include "digestrace/digests/lockset.hpp"

namespace digestrace {

struct OnceState {
  std::set<std::string> active;
  std::set<std::string> completed;
  auto operator<=>(const OnceState&) const = default;
};

class OnceDigest : public Digest<OnceDigest, OnceState> {
 public:
  std::string name() const override { return "once"; }
  std::vector<OnceState> init() const { return {OnceState{}}; }
  std::optional<OnceState> fresh(const OnceState& parent, const Action&) const {
    return OnceState{{}, parent.completed};
  }
  std::optional<OnceState> local(const Action& act, const OnceState& s) const {
    switch (act.kind) {
      case ActionKind::EndO: {
        OnceState r = s;
        r.active.erase(act.target);
        r.completed.insert(act.target);
        return r;
      }
      case ActionKind::PosRan:
        if (!s.completed.count(act.target)) return std::nullopt;
        return s;
      case ActionKind::NegRan:
        if (s.completed.count(act.target)) return std::nullopt;
        return s;
      default:
        return s;
    }
  }
  virtual std::optional<OnceState> observe(const Action& act, const OnceState& s0, const OnceState& s1) const {
    if (act.kind != ActionKind::StartO) return s0;
    if (s0.active.count(act.target)) return std::nullopt;
    OnceState r = s0;
    r.active.insert(act.target);
    r.completed.insert(s1.completed.begin(), s1.completed.end());
    return r;
  }
  Verdict may_parallel(const std::string&, const OnceState& a, const OnceState& b) const {
    auto hits = [](const std::set<std::string>& x, const OnceState& y) {
      for (const auto& o : x)
        if (y.active.count(o) || y.completed.count(o)) return true;
      return false;
    };
    if (hits(a.active, b) || hits(b.active, a)) return Verdict::False;
    return Verdict::Top;
  }
  OnceState alpha(const Program& p, const LocalTrace& t) const {
    const Lane& ego = t.ego_lane();
    OnceState s;
    if (ego.parent) s.completed = alpha(p, past_trace(p, t.lanes, *ego.parent)).completed;
    for (const auto& st : ego.steps) {
      const auto& a = p.edges[st.edge].action;
      if (a.kind == ActionKind::StartO) {
        s.active.insert(a.target);
        auto c1 = alpha(p, past_trace(p, t.lanes, *st.observed)).completed;
        s.completed.insert(c1.begin(), c1.end());
      } else if (a.kind == ActionKind::EndO) {
        s.active.erase(a.target);
        s.completed.insert(a.target);
      }
    }
    return s;
  }
  std::string describe(const OnceState& s) const {
    return "(" + describe_set(s.active) + ", " + describe_set(s.completed) + ")";
  }
};

}  // namespace digestrace
