#pragma once

// Atomicity instrumentation: every access to a global g is wrapped as
// lock(m_g); access; unlock(m_g), and main gets a prologue initializing the
// once variables and the atomicity mutexes.

#include <stdexcept>
#include <vector>

#include "digestrace/program.hpp"

namespace digestrace {

struct AccessSite {
  EdgeId edge;    // the access edge itself
  NodeId node;    // its source, the point between lock(m_g) and the access
  std::string global;
  AccessType type;
  int line;

  auto operator<=>(const AccessSite&) const = default;
};

/// The three edges of an instrumented access.
struct AccessSequence {
  EdgeId lock;
  EdgeId access;
  EdgeId unlock;
};

inline Program instrument_atomicity(const Program& src) {
  if (src.instrumented) throw ValidationError("program is already instrumented");
  for (const auto& m : src.mutexes)
    if (is_reserved_mutex_name(m)) throw ValidationError("mutex '" + m + "' uses the reserved m_ prefix");

  Program p = src;
  for (const auto& g : p.globals) p.mutexes.insert(Program::atomicity_mutex(g));

  const std::size_t original = p.edges.size();
  for (EdgeId i = 0; i < original; ++i) {
    if (!p.edges[i].action.is_access()) continue;
    Edge e = p.edges[i];
    auto owner = p.node_owner[e.source];
    std::string m = Program::atomicity_mutex(e.action.target);
    NodeId v1 = p.add_node(owner);
    NodeId v2 = p.add_node(owner);
    p.edges[i] = {e.source, Action::lock(m), v1, e.line};
    p.add_edge({v1, e.action, v2, e.line});
    p.add_edge({v2, Action::unlock(m), e.target, e.line});
  }

  std::vector<Action> prologue;
  for (const auto& o : p.once_vars) prologue.push_back(Action::init_once(o));
  for (const auto& g : p.globals) prologue.push_back(Action::init(Program::atomicity_mutex(g)));
  if (!prologue.empty()) {
    std::uint32_t main_index = 0;
    while (p.prototypes[main_index].label != kMainLabel) ++main_index;
    NodeId old_start = p.prototypes[main_index].start;
    NodeId start = p.add_node(main_index);
    NodeId cur = start;
    for (std::size_t i = 0; i < prologue.size(); ++i) {
      NodeId next = i + 1 == prologue.size() ? old_start : p.add_node(main_index);
      p.add_edge({cur, prologue[i], next, 0});
      cur = next;
    }
    p.prototypes[main_index].start = start;
  }
  p.instrumented = true;
  p.reindex();
  return p;
}

inline std::vector<AccessSite> access_sites(const Program& p) {
  if (!p.instrumented) throw std::logic_error("access_sites requires an instrumented program");
  std::vector<AccessSite> out;
  for (EdgeId i = 0; i < p.edges.size(); ++i) {
    const auto& e = p.edges[i];
    if (e.action.is_access()) out.push_back({i, e.source, e.action.target, e.action.access_type(), e.line});
  }
  return out;
}

inline AccessSequence access_sequence(const Program& p, EdgeId access) {
  const auto& e = p.edges.at(access);
  const auto& in = p.in_edges(e.source);
  const auto& out = p.out_edges(e.target);
  if (!e.action.is_access() || in.size() != 1 || out.size() != 1)
    throw std::logic_error("edge is not an instrumented access");
  return {in.front(), access, out.front()};
}

/// The access whose sequence ends with this unlock(m_g) edge, if any.
inline std::optional<EdgeId> access_before_unlock(const Program& p, EdgeId unlock) {
  const auto& e = p.edges.at(unlock);
  if (e.action.kind != ActionKind::Unlock) return std::nullopt;
  const auto& in = p.in_edges(e.source);
  if (in.size() != 1 || !p.edges[in.front()].action.is_access()) return std::nullopt;
  if (Program::atomicity_mutex(p.edges[in.front()].action.target) != e.action.target) return std::nullopt;
  return in.front();
}

}  // namespace digestrace
