#pragma once

#include <sstream>
#include <string>

#include "digestrace/program.hpp"

namespace digestrace {

namespace detail {
inline void print_decl(std::ostringstream& os, const char* kw, const std::set<std::string>& names) {
  if (names.empty()) return;
  os << kw;
  bool first = true;
  for (const auto& n : names) {
    os << (first ? " " : ", ") << n;
    first = false;
  }
  os << '\n';
}
}  // namespace detail

/// Canonical text form: every node gets a label `n<id>` and every edge is
/// printed with an explicit target, so re-parsing reproduces node ids.
inline std::string print_program(const Program& p) {
  std::ostringstream os;
  detail::print_decl(os, "global", p.globals);
  std::set<std::string> user_mutexes;
  for (const auto& m : p.mutexes)
    if (!(p.instrumented && is_reserved_mutex_name(m))) user_mutexes.insert(m);
  detail::print_decl(os, "mutex", user_mutexes);
  detail::print_decl(os, "once", p.once_vars);
  for (std::uint32_t pi = 0; pi < p.prototypes.size(); ++pi) {
    os << '\n' << p.prototypes[pi].label << ":\n";
    for (NodeId n = 0; n < p.node_count(); ++n) {
      if (p.node_owner[n] != pi) continue;
      os << "  n" << n << ":\n";
      for (EdgeId e : p.out_edges(n)) os << "    " << p.edges[e].action.str() << " -> n" << p.edges[e].target << '\n';
    }
  }
  return os.str();
}

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

/// Graphviz rendering of the CFGs, one cluster per prototype.
inline std::string program_to_dot(const Program& p) {
  std::ostringstream os;
  os << "digraph program {\n  node [shape=circle, fontsize=10];\n";
  for (std::uint32_t pi = 0; pi < p.prototypes.size(); ++pi) {
    const auto& proto = p.prototypes[pi];
    os << "  subgraph cluster_" << pi << " {\n    label=\"" << dot_escape(proto.label) << "\";\n";
    for (NodeId n = 0; n < p.node_count(); ++n) {
      if (p.node_owner[n] != pi) continue;
      os << "    n" << n << " [label=\"" << n << "\"" << (n == proto.start ? ", shape=doublecircle" : "") << "];\n";
    }
    for (EdgeId e : proto.edges) {
      const auto& edge = p.edges[e];
      os << "    n" << edge.source << " -> n" << edge.target << " [label=\"" << dot_escape(edge.action.str()) << "\"];\n";
    }
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace digestrace
