#pragma once

#include <set>
#include <string>

#include "digestrace/digest.hpp"

namespace digestrace {

using Lockset = std::set<std::string>;

inline std::string describe_set(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? "," : "") + x;
  return out + "}";
}

/// Mutexes held by the ego thread.
class LocksetDigest : public Digest<LocksetDigest, Lockset> {
 public:
  std::string name() const override { return "lockset"; }
  std::vector<Lockset> init() const { return {Lockset{}}; }
  std::optional<Lockset> fresh(const Lockset&, const Action&) const { return Lockset{}; }

  std::optional<Lockset> local(const Action& act, const Lockset& s) const {
    if (act.kind != ActionKind::Unlock) return s;
    if (!s.count(act.target)) return std::nullopt;
    Lockset r = s;
    r.erase(act.target);
    return r;
  }

  virtual std::optional<Lockset> observe(const Action& act, const Lockset& s0, const Lockset& /*s1*/) const {
    if (act.kind != ActionKind::Lock) return s0;
    if (s0.count(act.target)) return std::nullopt;
    Lockset r = s0;
    r.insert(act.target);
    return r;
  }

  Verdict may_parallel(const std::string&, const Lockset& a, const Lockset& b) const {
    for (const auto& m : a)
      if (b.count(m)) return Verdict::False;
    return Verdict::Top;
  }

  Lockset alpha(const Program& p, const LocalTrace& t) const {
    Lockset held;
    for (const auto& s : t.ego_lane().steps) {
      const auto& a = p.edges[s.edge].action;
      if (a.kind == ActionKind::Lock) held.insert(a.target);
      if (a.kind == ActionKind::Unlock) held.erase(a.target);
    }
    return held;
  }

  std::string describe(const Lockset& s) const { return describe_set(s); }
};

}  // namespace digestrace
