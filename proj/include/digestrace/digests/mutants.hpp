#pragma once

// Deliberately broken digest variants. The law and soundness suites must
// reject every one of them.

#include <memory>
#include <string>
#include <vector>

#include "digestrace/digests/registry.hpp"

namespace digestrace {

/// Locking an atomicity mutex is refused when the two locksets share a mutex.
class LocksetIntersectMutant final : public LocksetDigest {
 public:
  std::optional<Lockset> observe(const Action& act, const Lockset& s0, const Lockset& s1) const override {
    if (act.kind == ActionKind::Lock && is_reserved_mutex_name(act.target))
      for (const auto& m : s0)
        if (s1.count(m)) return std::nullopt;
    return LocksetDigest::observe(act, s0, s1);
  }
};

/// Creating a thread leaves main in single-threaded mode.
class ThreadFlagStickyMutant final : public ThreadFlagDigest {
 public:
  std::optional<ThreadFlag> local(const Action& act, const ThreadFlag& m) const override {
    if (act.kind == ActionKind::Create && m == ThreadFlag::STMain) return m;
    return ThreadFlagDigest::local(act, m);
  }
};

/// Every created thread is considered unique.
class TidAlwaysUniqueMutant final : public TidDigest {
 public:
  std::optional<TidState> fresh(const TidState& parent, const Action& create) const override {
    TidState s;
    s.tid.prefix = parent.tid.prefix;
    s.tid.prefix.push_back(create.aux);
    return s;
  }
};

/// Joined threads are excluded even when their id is not unique.
class JoinNonUniqueMutant final : public JoinDigest {
 public:
  std::optional<JoinState> observe(const Action& act, const JoinState& s0, const JoinState& s1) const override {
    if (act.kind != ActionKind::Join) return s0;
    JoinState r = s0;
    r.joined.insert(s1.self.tid.prefix);
    r.joined.insert(s1.joined.begin(), s1.joined.end());
    return r;
  }
  Verdict may_parallel(const std::string&, const JoinState& a, const JoinState& b) const override {
    if (a.joined.count(b.self.tid.prefix) || b.joined.count(a.self.tid.prefix)) return Verdict::False;
    return Verdict::Top;
  }
};

/// startO forgets what the observed thread had completed.
class OnceForgetfulMutant final : public OnceDigest {
 public:
  std::optional<OnceState> observe(const Action& act, const OnceState& s0, const OnceState&) const override {
    if (act.kind != ActionKind::StartO) return s0;
    if (s0.active.count(act.target)) return std::nullopt;
    OnceState r = s0;
    r.active.insert(act.target);
    return r;
  }
};

struct Mutant {
  std::string digest;  // registry name of the digest it replaces
  std::string name;
  DigestPtr impl;
};

inline std::vector<Mutant> registered_mutants() {
  return {
      {"lockset", "lockset-intersect", std::make_shared<LocksetIntersectMutant>()},
      {"threadflag", "threadflag-sticky", std::make_shared<ThreadFlagStickyMutant>()},
      {"tid", "tid-always-unique", std::make_shared<TidAlwaysUniqueMutant>()},
      {"join", "join-non-unique", std::make_shared<JoinNonUniqueMutant>()},
      {"once", "once-forgetful", std::make_shared<OnceForgetfulMutant>()},
  };
}

/// The product of `names` with the component `m.digest` replaced by the mutant.
inline std::shared_ptr<ProductDigest> make_product_with(const std::vector<std::string>& names, const Mutant& m) {
  auto base = make_product(names);
  std::vector<DigestPtr> comps;
  for (const auto& c : base->components()) comps.push_back(c->name() == m.digest ? m.impl : c);
  return std::make_shared<ProductDigest>(std::move(comps));
}

}  // namespace digestrace
