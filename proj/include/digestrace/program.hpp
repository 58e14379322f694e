#pragma once

// Control-flow graphs of thread prototypes with concurrency actions.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace digestrace {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr std::string_view kMainLabel = "main";
inline constexpr std::string_view kAtomicityPrefix = "m_";

enum class ActionKind : std::uint8_t {
  Init,
  Lock,
  Unlock,
  Create,
  Join,
  ReadGlobal,
  WriteGlobal,
  InitO,
  StartO,
  EndO,
  PosRan,
  NegRan,
  Skip,
  ThreadExit,
};

enum class ActionClass : std::uint8_t { Local, Observable, Observing, Creating };

enum class AccessType : std::uint8_t { W, R };

inline const char* to_string(AccessType t) { return t == AccessType::W ? "W" : "R"; }

/// One CFG action. `target` names the mutex, global, once variable or created
/// prototype; `aux` holds the local variable of an access or the handle of a
/// create/join.
struct Action {
  ActionKind kind = ActionKind::Skip;
  std::string target;
  std::string aux;

  auto operator<=>(const Action&) const = default;

  static Action init(std::string m) { return {ActionKind::Init, std::move(m), {}}; }
  static Action lock(std::string m) { return {ActionKind::Lock, std::move(m), {}}; }
  static Action unlock(std::string m) { return {ActionKind::Unlock, std::move(m), {}}; }
  static Action create(std::string proto, std::string handle) {
    return {ActionKind::Create, std::move(proto), std::move(handle)};
  }
  static Action join(std::string handle) { return {ActionKind::Join, std::move(handle), {}}; }
  static Action read(std::string g, std::string local) {
    return {ActionKind::ReadGlobal, std::move(g), std::move(local)};
  }
  static Action write(std::string g, std::string local) {
    return {ActionKind::WriteGlobal, std::move(g), std::move(local)};
  }
  static Action init_once(std::string o) { return {ActionKind::InitO, std::move(o), {}}; }
  static Action start_once(std::string o) { return {ActionKind::StartO, std::move(o), {}}; }
  static Action end_once(std::string o) { return {ActionKind::EndO, std::move(o), {}}; }
  static Action pos_ran(std::string o) { return {ActionKind::PosRan, std::move(o), {}}; }
  static Action neg_ran(std::string o) { return {ActionKind::NegRan, std::move(o), {}}; }
  static Action skip() { return {ActionKind::Skip, {}, {}}; }
  static Action thread_exit() { return {ActionKind::ThreadExit, {}, {}}; }

  ActionClass classify() const {
    switch (kind) {
      case ActionKind::Init:
      case ActionKind::Unlock:
      case ActionKind::EndO:
      case ActionKind::InitO:
      case ActionKind::ThreadExit:
        return ActionClass::Observable;
      case ActionKind::Lock:
      case ActionKind::StartO:
      case ActionKind::Join:
        return ActionClass::Observing;
      case ActionKind::Create:
        return ActionClass::Creating;
      default:
        return ActionClass::Local;
    }
  }

  bool is_access() const {
    return kind == ActionKind::ReadGlobal || kind == ActionKind::WriteGlobal;
  }
  bool is_observing() const { return classify() == ActionClass::Observing; }
  bool is_observable() const { return classify() == ActionClass::Observable; }

  AccessType access_type() const {
    return kind == ActionKind::WriteGlobal ? AccessType::W : AccessType::R;
  }

  std::string str() const {
    switch (kind) {
      case ActionKind::Init: return "init " + target;
      case ActionKind::Lock: return "lock " + target;
      case ActionKind::Unlock: return "unlock " + target;
      case ActionKind::Create: return "create " + target + " as " + aux;
      case ActionKind::Join: return "join " + target;
      case ActionKind::ReadGlobal: return aux + " = " + target;
      case ActionKind::WriteGlobal: return target + " = " + aux;
      case ActionKind::InitO: return "inito " + target;
      case ActionKind::StartO: return "starto " + target;
      case ActionKind::EndO: return "endo " + target;
      case ActionKind::PosRan: return "pos ran(" + target + ")";
      case ActionKind::NegRan: return "neg ran(" + target + ")";
      case ActionKind::Skip: return "skip";
      case ActionKind::ThreadExit: return "exit";
    }
    return "?";
  }
};

struct Edge {
  NodeId source = 0;
  Action action;
  NodeId target = 0;
  int line = 0;  // source line, 0 for synthesized edges
};

struct ThreadPrototype {
  std::string label;
  NodeId start = 0;
  std::vector<EdgeId> edges;
};

/// Base of every error raised while reading or transforming a program.
class ProgramError : public std::runtime_error {
 public:
  ProgramError(const std::string& what, int line, int column)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SyntaxError : public ProgramError {
 public:
  SyntaxError(const std::string& msg, int line, int column)
      : ProgramError(std::to_string(line) + ":" + std::to_string(column) +
                         ": syntax error: " + msg,
                     line, column) {}
};

class ValidationError : public ProgramError {
 public:
  explicit ValidationError(const std::string& msg, int line = 0, int column = 0)
      : ProgramError((line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " : std::string{}) +
                         "invalid program: " + msg,
                     line, column) {}
};

class Program {
 public:
  std::vector<ThreadPrototype> prototypes;  // declaration order
  std::vector<Edge> edges;
  std::vector<std::uint32_t> node_owner;  // node -> prototype index
  std::set<std::string> globals;
  std::set<std::string> mutexes;
  std::set<std::string> once_vars;
  bool instrumented = false;

  std::size_t node_count() const { return node_owner.size(); }

  NodeId add_node(std::uint32_t owner) {
    node_owner.push_back(owner);
    return static_cast<NodeId>(node_owner.size() - 1);
  }

  EdgeId add_edge(Edge e) {
    edges.push_back(std::move(e));
    auto id = static_cast<EdgeId>(edges.size() - 1);
    prototypes.at(node_owner.at(edges.back().source)).edges.push_back(id);
    return id;
  }

  /// Rebuilds the adjacency index; call after mutating `edges`.
  void reindex() {
    out_.assign(node_count(), {});
    in_.assign(node_count(), {});
    for (EdgeId i = 0; i < edges.size(); ++i) {
      out_[edges[i].source].push_back(i);
      in_[edges[i].target].push_back(i);
    }
  }

  const std::vector<EdgeId>& out_edges(NodeId n) const { return out_.at(n); }
  const std::vector<EdgeId>& in_edges(NodeId n) const { return in_.at(n); }

  const ThreadPrototype* find_prototype(std::string_view label) const {
    for (const auto& p : prototypes)
      if (p.label == label) return &p;
    return nullptr;
  }
  const ThreadPrototype& prototype(std::string_view label) const {
    if (auto* p = find_prototype(label)) return *p;
    throw std::out_of_range("unknown prototype " + std::string(label));
  }
  const ThreadPrototype& main() const { return prototype(kMainLabel); }
  const ThreadPrototype& owner(NodeId n) const { return prototypes.at(node_owner.at(n)); }

  /// The Create edge carrying handle `h`.
  std::optional<EdgeId> create_edge(std::string_view handle) const {
    for (EdgeId i = 0; i < edges.size(); ++i)
      if (edges[i].action.kind == ActionKind::Create && edges[i].action.aux == handle) return i;
    return std::nullopt;
  }

  static std::string atomicity_mutex(std::string_view global) {
    return std::string(kAtomicityPrefix) + std::string(global);
  }

 private:
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
};

inline bool is_reserved_mutex_name(std::string_view name) {
  return name.substr(0, kAtomicityPrefix.size()) == kAtomicityPrefix;
}

/// Equality of the program model up to edge order and source lines.
inline bool structurally_equal(const Program& a, const Program& b) {
  if (a.globals != b.globals || a.mutexes != b.mutexes || a.once_vars != b.once_vars ||
      a.instrumented != b.instrumented || a.node_owner != b.node_owner ||
      a.prototypes.size() != b.prototypes.size())
    return false;
  for (std::size_t i = 0; i < a.prototypes.size(); ++i)
    if (a.prototypes[i].label != b.prototypes[i].label ||
        a.prototypes[i].start != b.prototypes[i].start)
      return false;
  auto key = [](const Program& p) {
    std::vector<std::tuple<NodeId, Action, NodeId>> v;
    for (const auto& e : p.edges) v.emplace_back(e.source, e.action, e.target);
    std::sort(v.begin(), v.end());
    return v;
  };
  return key(a) == key(b);
}

}  // namespace digestrace
