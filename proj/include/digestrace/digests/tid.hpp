#pragma once

// History-based thread ids. A thread id is the list of create handles along
// which the thread descends from main, as long as each creation is known to
// be the only one of its kind (the prefix); once that fails, the remaining
// handles are only collected as a set (the tail) and the id is no longer
// unique.

#include <set>
#include <string>
#include <vector>

#include "digestrace/digest.hpp"

namespace digestrace {

struct ThreadId {
  std::vector<std::string> prefix;
  std::set<std::string> tail;
  auto operator<=>(const ThreadId&) const = default;
  bool unique() const { return tail.empty(); }
};

struct TidState {
  ThreadId tid;
  std::set<std::string> created;  // handles of creates the ego has executed
  auto operator<=>(const TidState&) const = default;
};

inline std::string describe(const ThreadId& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.prefix.size(); ++i) s += (i ? "," : "") + t.prefix[i];
  s += "]";
  if (!t.unique()) {
    s += "+{";
    bool first = true;
    for (const auto& h : t.tail) {
      s += (first ? "" : ",") + h;
      first = false;
    }
    s += "}";
  }
  return s;
}

inline std::string describe(const TidState& t) {
  std::string s = describe(t.tid) + " created{";
  bool first = true;
  for (const auto& h : t.created) {
    s += (first ? "" : ",") + h;
    first = false;
  }
  return s + "}";
}

namespace tid {

inline ThreadId child(const TidState& parent, const std::string& handle) {
  const auto& p = parent.tid;
  bool first_of_kind = !parent.created.count(handle) &&
                       std::find(p.prefix.begin(), p.prefix.end(), handle) == p.prefix.end();
  ThreadId c = p;
  if (p.unique() && first_of_kind)
    c.prefix.push_back(handle);
  else
    c.tail.insert(handle);
  return c;
}

/// Thread id of a concrete creation history.
inline ThreadId of_instance(const Program& p, const InstanceId& id) {
  ThreadId t;
  for (const auto& tag : id) {
    const auto& h = p.edges[tag.edge].action.aux;
    bool unique = t.unique() && tag.ordinal == 0 &&
                  std::find(t.prefix.begin(), t.prefix.end(), h) == t.prefix.end();
    if (unique)
      t.prefix.push_back(h);
    else
      t.tail.insert(h);
  }
  return t;
}

inline TidState alpha(const Program& p, const LocalTrace& t) {
  TidState s{of_instance(p, t.ego), {}};
  for (const auto& st : t.ego_lane().steps) {
    const auto& a = p.edges[st.edge].action;
    if (a.kind == ActionKind::Create) s.created.insert(a.aux);
  }
  return s;
}

/// False when `b` provably has not been created yet from `a`'s point of
/// view: `b` descends from `a` through a create `a` has not executed.
inline bool may_run(const TidState& a, const TidState& b) {
  if (!a.tid.unique()) return true;
  const auto& pa = a.tid.prefix;
  const auto& pb = b.tid.prefix;
  if (pb.size() <= pa.size() || !std::equal(pa.begin(), pa.end(), pb.begin())) return true;
  return a.created.count(pb[pa.size()]) > 0;
}

inline Verdict mhp(const TidState& a, const TidState& b) {
  if (a.tid == b.tid && a.tid.unique()) return Verdict::False;
  if (!may_run(a, b) || !may_run(b, a)) return Verdict::False;
  return Verdict::Top;
}

}  // namespace tid

class TidDigest : public Digest<TidDigest, TidState> {
 public:
  std::string name() const override { return "tid"; }
  std::vector<TidState> init() const { return {TidState{}}; }
  virtual std::optional<TidState> fresh(const TidState& parent, const Action& create) const {
    return TidState{tid::child(parent, create.aux), {}};
  }
  std::optional<TidState> local(const Action& act, const TidState& s) const {
    if (act.kind != ActionKind::Create) return s;
    TidState r = s;
    r.created.insert(act.aux);
    return r;
  }
  std::optional<TidState> observe(const Action&, const TidState& s0, const TidState&) const { return s0; }
  Verdict may_parallel(const std::string&, const TidState& a, const TidState& b) const { return tid::mhp(a, b); }
  TidState alpha(const Program& p, const LocalTrace& t) const { return tid::alpha(p, t); }
  std::string describe(const TidState& s) const { return digestrace::describe(s); }
};

}  // namespace digestrace
