#pragma once

// Digest-refined constraint system over the two-point reachability domain,
// with per-global accumulators of access records, solved by a FIFO worklist.

#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "digestrace/digest.hpp"
#include "digestrace/instrument.hpp"

namespace digestrace {

class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AccessRecord {
  NodeId site = 0;  // source of the access edge
  EdgeId edge = 0;
  AccessType type = AccessType::R;
  AnyElement digest;
  int line = 0;
};

struct SolverOptions {
  std::size_t max_evaluations = 1000000;
};

using ElementSet = std::unordered_set<AnyElement, AnyElementHash>;

struct Solution {
  std::vector<ElementSet> reached;                    // per node: digests with [u, A] = •
  std::map<std::string, ElementSet> observed;         // per observable key
  std::map<std::string, std::vector<AccessRecord>> accesses;  // per global
  std::size_t evaluations = 0;

  bool reachable(NodeId u, const AnyElement& a) const { return reached.at(u).count(a) > 0; }

  /// Stable dump: unknowns with value •, and the access accumulators.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    std::vector<std::string> pp;
    for (NodeId u = 0; u < reached.size(); ++u)
      for (const auto& a : reached[u]) pp.push_back("[" + std::to_string(u) + ", " + a.str() + "]");
    std::sort(pp.begin(), pp.end());
    j["program_points"] = pp;
    nlohmann::ordered_json obs = nlohmann::ordered_json::object();
    for (const auto& [k, s] : observed) {
      std::vector<std::string> v;
      for (const auto& a : s) v.push_back(a.str());
      std::sort(v.begin(), v.end());
      obs[k] = v;
    }
    j["observables"] = obs;
    nlohmann::ordered_json acc = nlohmann::ordered_json::object();
    for (const auto& [g, recs] : accesses) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : recs)
        arr.push_back({{"site", r.site}, {"line", r.line}, {"type", to_string(r.type)}, {"digest", r.digest.str()}});
      acc[g] = arr;
    }
    j["accesses"] = acc;
    return j;
  }
};

/// Key of the unknown an observable action contributes to, or that an
/// observing action reads from.
inline std::string observable_key(const Program& p, const Edge& e) {
  const auto& a = e.action;
  switch (a.kind) {
    case ActionKind::Init:
    case ActionKind::Unlock:
    case ActionKind::Lock:
      return "mutex " + a.target;
    case ActionKind::InitO:
    case ActionKind::EndO:
    case ActionKind::StartO:
      return "once " + a.target;
    case ActionKind::ThreadExit:
      return "exit " + p.owner(e.source).label;
    case ActionKind::Join: {
      auto ce = p.create_edge(a.target);
      return "exit " + (ce ? p.edges[*ce].action.target : std::string("?"));
    }
    default:
      return {};
  }
}

namespace detail {

class Solver {
 public:
  Solver(const Program& p, const AnyDigest& d, SolverOptions o) : p_(p), d_(d), opt_(o) {
    sol_.reached.resize(p.node_count());
  }

  Solution run() {
    for (auto& a : d_.init_digests()) reach(p_.main().start, a);
    while (!work_.empty()) {
      auto [u, a] = std::move(work_.front());
      work_.pop_front();
      for (EdgeId e : p_.out_edges(u)) apply(e, a);
    }
    for (auto& [g, recs] : sol_.accesses)
      std::sort(recs.begin(), recs.end(), [](const AccessRecord& x, const AccessRecord& y) {
        return std::tie(x.site, x.type) < std::tie(y.site, y.type) ||
               (std::tie(x.site, x.type) == std::tie(y.site, y.type) && x.digest.str() < y.digest.str());
      });
    return std::move(sol_);
  }

 private:
  struct Waiter {
    EdgeId edge;
    AnyElement digest;
  };

  const Program& p_;
  const AnyDigest& d_;
  SolverOptions opt_;
  Solution sol_;
  std::deque<std::pair<NodeId, AnyElement>> work_;
  std::map<std::string, std::vector<Waiter>> waiters_;
  std::set<std::tuple<std::string, NodeId, EdgeId, std::string>> recorded_;

  void tick() {
    if (++sol_.evaluations > opt_.max_evaluations)
      throw Divergence("constraint evaluation limit of " + std::to_string(opt_.max_evaluations) +
                       " exceeded; the digest universe may be unbounded");
  }

  void reach(NodeId u, const AnyElement& a) {
    if (sol_.reached[u].insert(a).second) work_.emplace_back(u, a);
  }

  void apply(EdgeId eid, const AnyElement& a) {
    const Edge& e = p_.edges[eid];
    const auto& act = e.action;
    tick();
    if (act.is_observing()) {
      auto key = observable_key(p_, e);
      waiters_[key].push_back({eid, a});
      auto it = sol_.observed.find(key);
      if (it == sol_.observed.end()) return;
      std::vector<AnyElement> partners(it->second.begin(), it->second.end());
      for (const auto& a1 : partners) {
        tick();
        if (auto r = d_.step_observing(act, a, a1)) reach(e.target, *r);
      }
      return;
    }
    auto r = d_.step_local(act, a);
    if (act.kind == ActionKind::Create) {
      if (auto c = d_.new_digest(a, act)) reach(p_.prototype(act.target).start, *c);
    }
    if (!r) return;
    reach(e.target, *r);
    if (act.is_observable()) publish(observable_key(p_, e), *r);
    if (act.kind == ActionKind::Unlock) {
      if (auto acc = access_before_unlock(p_, eid)) record(*acc, *r);
    }
  }

  void publish(const std::string& key, const AnyElement& a1) {
    if (!sol_.observed[key].insert(a1).second) return;
    auto it = waiters_.find(key);
    if (it == waiters_.end()) return;
    auto ws = it->second;
    for (const auto& w : ws) {
      tick();
      const Edge& e = p_.edges[w.edge];
      if (auto r = d_.step_observing(e.action, w.digest, a1)) reach(e.target, *r);
    }
  }

  void record(EdgeId access, const AnyElement& a) {
    const Edge& e = p_.edges[access];
    const auto& g = e.action.target;
    if (!recorded_.emplace(g, e.source, access, a.str()).second) return;
    sol_.accesses[g].push_back({e.source, access, e.action.access_type(), a, e.line});
  }
};

}  // namespace detail

inline Solution solve(const Program& p, const AnyDigest& d, SolverOptions opt = {}) {
  if (!p.instrumented) throw std::logic_error("solve requires an instrumented program");
  return detail::Solver(p, d, opt).run();
}

}  // namespace digestrace
