#pragma once

// Must-joined threads on top of history-based thread ids. A thread with a
// unique id whose exit was observed by a join (directly or transitively)
// cannot run in parallel with anything that comes after.

#include <set>
#include <string>
#include <vector>

#include "digestrace/digests/tid.hpp"

namespace digestrace {

struct JoinState {
  TidState self;
  std::set<std::vector<std::string>> joined;  // prefixes of unique joined threads
  auto operator<=>(const JoinState&) const = default;
};

class JoinDigest : public Digest<JoinDigest, JoinState> {
 public:
  std::string name() const override { return "join"; }
  std::vector<JoinState> init() const { return {JoinState{}}; }
  std::optional<JoinState> fresh(const JoinState& parent, const Action& create) const {
    return JoinState{{tid::child(parent.self, create.aux), {}}, {}};
  }
  std::optional<JoinState> local(const Action& act, const JoinState& s) const {
    if (act.kind != ActionKind::Create) return s;
    JoinState r = s;
    r.self.created.insert(act.aux);
    return r;
  }
  virtual std::optional<JoinState> observe(const Action& act, const JoinState& s0, const JoinState& s1) const {
    if (act.kind != ActionKind::Join) return s0;
    JoinState r = s0;
    const auto& child = s1.self.tid;
    if (child.unique()) {
      // a unique child is the first creation along this handle from a unique parent
      auto expected = s0.self.tid.prefix;
      expected.push_back(act.target);
      if (!s0.self.tid.unique() || child.prefix != expected) return std::nullopt;
      r.joined.insert(child.prefix);
    }
    r.joined.insert(s1.joined.begin(), s1.joined.end());
    return r;
  }
  virtual Verdict may_parallel(const std::string&, const JoinState& a, const JoinState& b) const {
    if (b.self.tid.unique() && a.joined.count(b.self.tid.prefix)) return Verdict::False;
    if (a.self.tid.unique() && b.joined.count(a.self.tid.prefix)) return Verdict::False;
    return Verdict::Top;
  }
  JoinState alpha(const Program& p, const LocalTrace& t) const {
    JoinState s{tid::alpha(p, t), {}};
    for (const auto& st : t.ego_lane().steps) {
      if (p.edges[st.edge].action.kind != ActionKind::Join) continue;
      auto sub = past_trace(p, t.lanes, *st.observed);
      auto child = tid::of_instance(p, sub.ego);
      if (child.unique()) s.joined.insert(child.prefix);
      auto inner = alpha(p, sub).joined;
      s.joined.insert(inner.begin(), inner.end());
    }
    return s;
  }
  std::string describe(const JoinState& s) const {
    std::string out = digestrace::describe(s.self) + " joined{";
    bool first = true;
    for (const auto& j : s.joined) {
      ThreadId t{j, {}};
      out += (first ? "" : ",") + digestrace::describe(t);
      first = false;
    }
    return out + "}";
  }
};

}  // namespace digestrace
