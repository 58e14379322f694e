#pragma once

#include <string>

#include "digestrace/digest.hpp"

namespace digestrace {

enum class ThreadFlag : std::uint8_t { STMain, MTMain, MT };

inline const char* to_string(ThreadFlag f) {
  switch (f) {
    case ThreadFlag::STMain: return "ST_main";
    case ThreadFlag::MTMain: return "MT_main";
    case ThreadFlag::MT: return "MT";
  }
  return "?";
}

/// Main before any create, main after a create, or some other thread.
class ThreadFlagDigest : public Digest<ThreadFlagDigest, ThreadFlag> {
 public:
  std::string name() const override { return "threadflag"; }
  std::vector<ThreadFlag> init() const { return {ThreadFlag::STMain}; }
  std::optional<ThreadFlag> fresh(const ThreadFlag&, const Action&) const { return ThreadFlag::MT; }

  virtual std::optional<ThreadFlag> local(const Action& act, const ThreadFlag& m) const {
    if (act.kind == ActionKind::Create) return m == ThreadFlag::MT ? ThreadFlag::MT : ThreadFlag::MTMain;
    return m;
  }

  std::optional<ThreadFlag> observe(const Action& act, const ThreadFlag& m0, const ThreadFlag& m1) const {
    if (act.kind == ActionKind::Lock && m0 == ThreadFlag::STMain && m1 != ThreadFlag::STMain) return std::nullopt;
    return m0;
  }

  Verdict may_parallel(const std::string&, const ThreadFlag& a, const ThreadFlag& b) const {
    if (a == ThreadFlag::STMain || b == ThreadFlag::STMain) return Verdict::False;
    if (a == ThreadFlag::MTMain && b == ThreadFlag::MTMain) return Verdict::False;
    return Verdict::Top;
  }

  ThreadFlag alpha(const Program& p, const LocalTrace& t) const {
    if (!t.ego.empty()) return ThreadFlag::MT;
    for (const auto& s : t.ego_lane().steps)
      if (p.edges[s.edge].action.kind == ActionKind::Create) return ThreadFlag::MTMain;
    return ThreadFlag::STMain;
  }

  std::string describe(const ThreadFlag& f) const { return to_string(f); }
};

}  // namespace digestrace
