#pragma once

// Reader for the line-oriented program format (.rlp).
//
//   global g, dev        mutex a          once o
//   main:                                  prototype header, column 0
//     init a
//     g = x              write g / x = g   read g
//     create t1 as h     join h
//     lock a / unlock a
//     L:                 names the current node
//     goto L1, L2        nondeterministic jump
//     once o { ... }     lowered to starto/ran guards/endo
//     skip -> L          any statement may name an explicit target
//
// Comments start with '#' or "//". Body lines must be indented.

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "digestrace/program.hpp"

namespace digestrace {

namespace detail {

struct Token {
  enum Kind { Ident, Number, Punct } kind;
  std::string text;
  int column;
};

inline std::vector<Token> tokenize(std::string_view line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
      out.push_back({Token::Ident, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i + 1;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      out.push_back({Token::Number, std::string(line.substr(i, j - i)), col});
      i = j;
    } else if (c == '-' && i + 1 < line.size() && line[i + 1] == '>') {
      out.push_back({Token::Punct, "->", col});
      i += 2;
    } else if (std::string_view("(),{}=:").find(c) != std::string_view::npos) {
      out.push_back({Token::Punct, std::string(1, c), col});
      ++i;
    } else {
      throw SyntaxError(std::string("unexpected character '") + c + "'", lineno, col);
    }
  }
  return out;
}

inline bool is_keyword(std::string_view s) {
  static const std::set<std::string, std::less<>> kw = {
      "global", "mutex", "once", "init", "lock", "unlock", "create", "as", "join",
      "inito", "starto", "endo", "pos", "neg", "ran", "skip", "exit", "goto"};
  return kw.count(s) > 0;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program run() {
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      std::size_t eol = text_.find('\n', pos);
      if (eol == std::string_view::npos) eol = text_.size();
      std::string_view raw = text_.substr(pos, eol - pos);
      pos = eol + 1;
      ++lineno;
      line_ = lineno;
      if (auto c = raw.find('#'); c != std::string_view::npos) raw = raw.substr(0, c);
      if (auto c = raw.find("//"); c != std::string_view::npos) raw = raw.substr(0, c);
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      auto toks = tokenize(raw, lineno);
      if (toks.empty()) continue;
      bool indented = std::isspace(static_cast<unsigned char>(raw.front()));
      if (indented) {
        if (!proto_) throw SyntaxError("statement outside of a thread prototype", lineno, toks[0].column);
        statement(toks);
      } else {
        toplevel(toks);
      }
      if (pos > text_.size()) break;
    }
    finish_prototype();
    finish_program();
    return std::move(prog_);
  }

 private:
  struct Pending {
    EdgeId edge;
    std::string label;
    int line, column;
  };
  struct OnceFrame {
    NodeId guard_node;
    std::string var;
    int line;
  };

  std::string_view text_;
  Program prog_;
  int line_ = 0;
  std::optional<std::uint32_t> proto_;
  std::optional<NodeId> cur_;
  std::map<std::string, NodeId> labels_;
  std::set<NodeId> labeled_;
  std::vector<Pending> pending_;
  std::vector<OnceFrame> once_stack_;
  std::vector<std::pair<EdgeId, int>> auto_handles_;
  std::set<std::string> handles_;
  std::vector<std::tuple<std::string, int, int>> create_refs_;

  [[noreturn]] void syntax(const std::string& msg, const Token& t) const { throw SyntaxError(msg, line_, t.column); }
  [[noreturn]] void invalid(const std::string& msg, int column = 1) const {
    throw ValidationError(msg, line_, column);
  }

  void expect_ident(const Token& t) const {
    if (t.kind != Token::Ident || is_keyword(t.text)) syntax("expected identifier, got '" + t.text + "'", t);
  }

  void expect_end(const std::vector<Token>& toks, std::size_t i) const {
    if (i < toks.size()) syntax("unexpected '" + toks[i].text + "'", toks[i]);
  }

  void toplevel(const std::vector<Token>& toks) {
    const auto& head = toks[0];
    if (head.kind == Token::Ident && (head.text == "global" || head.text == "mutex" || head.text == "once")) {
      if (toks.size() < 2) syntax("missing name after '" + head.text + "'", head);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (i % 2 == 0) {
          if (toks[i].text != ",") syntax("expected ','", toks[i]);
          continue;
        }
        expect_ident(toks[i]);
        declare(head.text, toks[i]);
      }
      if (toks.size() % 2 == 1 && toks.back().text == ",") syntax("dangling ','", toks.back());
      return;
    }
    if (toks.size() == 2 && head.kind == Token::Ident && toks[1].text == ":") {
      expect_ident(head);
      finish_prototype();
      if (prog_.find_prototype(head.text)) invalid("duplicate prototype '" + head.text + "'", head.column);
      prog_.prototypes.push_back({head.text, 0, {}});
      proto_ = static_cast<std::uint32_t>(prog_.prototypes.size() - 1);
      prog_.prototypes.back().start = prog_.add_node(*proto_);
      cur_ = prog_.prototypes.back().start;
      return;
    }
    syntax("expected declaration or 'label:' prototype header", head);
  }

  void declare(const std::string& kind, const Token& name) {
    const std::string& n = name.text;
    if (prog_.globals.count(n) || prog_.mutexes.count(n) || prog_.once_vars.count(n))
      invalid("'" + n + "' declared twice", name.column);
    if (kind == "global") {
      prog_.globals.insert(n);
    } else if (kind == "mutex") {
      if (is_reserved_mutex_name(n)) invalid("mutex name '" + n + "' uses the reserved m_ prefix", name.column);
      prog_.mutexes.insert(n);
    } else {
      prog_.once_vars.insert(n);
    }
  }

  NodeId new_node() { return prog_.add_node(*proto_); }

  NodeId ensure_cur() {
    if (!cur_) cur_ = new_node();
    return *cur_;
  }

  bool has_out(NodeId n) const {
    for (EdgeId e : prog_.prototypes[*proto_].edges)
      if (prog_.edges[e].source == n) return true;
    return false;
  }

  void emit(Action act, const std::optional<Token>& arrow_target) {
    NodeId from = ensure_cur();
    if (arrow_target) {
      EdgeId id = prog_.add_edge({from, std::move(act), from, line_});
      pending_.push_back({id, arrow_target->text, line_, arrow_target->column});
    } else {
      NodeId to = new_node();
      prog_.add_edge({from, std::move(act), to, line_});
      cur_ = to;
    }
  }

  const std::string& mutex_name(const Token& t) const {
    expect_ident(t);
    if (is_reserved_mutex_name(t.text)) invalid("mutex name '" + t.text + "' uses the reserved m_ prefix", t.column);
    if (!prog_.mutexes.count(t.text)) invalid("undeclared mutex '" + t.text + "'", t.column);
    return t.text;
  }

  const std::string& once_name(const Token& t) const {
    expect_ident(t);
    if (!prog_.once_vars.count(t.text)) invalid("undeclared once variable '" + t.text + "'", t.column);
    return t.text;
  }

  void statement(std::vector<Token> toks) {
    // label
    if (toks.size() == 2 && toks[1].text == ":") {
      expect_ident(toks[0]);
      bind_label(toks[0]);
      return;
    }
    std::optional<Token> arrow;
    if (toks.size() >= 2 && toks[toks.size() - 2].text == "->") {
      arrow = toks.back();
      expect_ident(*arrow);
      toks.resize(toks.size() - 2);
      if (toks.empty()) syntax("missing action before '->'", *arrow);
    }
    const Token& head = toks[0];
    auto need = [&](std::size_t n) {
      if (toks.size() < n) syntax("incomplete statement '" + head.text + "'", toks.back());
    };

    if (head.text == "}") {
      expect_end(toks, 1);
      if (arrow) syntax("'}' cannot take a target", head);
      close_once(head);
      return;
    }
    if (head.kind != Token::Ident) syntax("expected statement", head);
    const std::string& kw = head.text;
    if (kw == "init" || kw == "lock" || kw == "unlock") {
      need(2);
      expect_end(toks, 2);
      const auto& m = mutex_name(toks[1]);
      emit(kw == "init" ? Action::init(m) : kw == "lock" ? Action::lock(m) : Action::unlock(m), arrow);
    } else if (kw == "inito" || kw == "starto" || kw == "endo") {
      need(2);
      expect_end(toks, 2);
      const auto& o = once_name(toks[1]);
      emit(kw == "inito" ? Action::init_once(o) : kw == "starto" ? Action::start_once(o) : Action::end_once(o),
           arrow);
    } else if (kw == "pos" || kw == "neg") {
      need(5);
      if (toks[1].text != "ran" || toks[2].text != "(" || toks[4].text != ")")
        syntax("expected '" + kw + " ran(o)'", toks[1]);
      expect_end(toks, 5);
      const auto& o = once_name(toks[3]);
      emit(kw == "pos" ? Action::pos_ran(o) : Action::neg_ran(o), arrow);
    } else if (kw == "create") {
      need(2);
      expect_ident(toks[1]);
      std::string handle;
      if (toks.size() > 2) {
        if (toks[2].text != "as") syntax("expected 'as'", toks[2]);
        need(4);
        expect_ident(toks[3]);
        expect_end(toks, 4);
        handle = toks[3].text;
        if (!handles_.insert(handle).second) invalid("duplicate thread handle '" + handle + "'", toks[3].column);
      }
      create_refs_.emplace_back(toks[1].text, line_, toks[1].column);
      emit(Action::create(toks[1].text, handle), arrow);
      if (handle.empty()) {
        EdgeId id = static_cast<EdgeId>(prog_.edges.size() - 1);
        auto_handles_.emplace_back(id, line_);
      }
    } else if (kw == "join") {
      need(2);
      expect_end(toks, 2);
      expect_ident(toks[1]);
      emit(Action::join(toks[1].text), arrow);
    } else if (kw == "skip") {
      expect_end(toks, 1);
      emit(Action::skip(), arrow);
    } else if (kw == "exit") {
      expect_end(toks, 1);
      emit(Action::thread_exit(), arrow);
      if (!arrow) cur_.reset();
    } else if (kw == "goto") {
      if (arrow) syntax("'goto' cannot take a '->' target", head);
      need(2);
      NodeId from = ensure_cur();
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (i % 2 == 0) {
          if (toks[i].text != ",") syntax("expected ','", toks[i]);
          continue;
        }
        expect_ident(toks[i]);
        EdgeId id = prog_.add_edge({from, Action::skip(), from, line_});
        pending_.push_back({id, toks[i].text, line_, toks[i].column});
      }
      if (toks.back().text == ",") syntax("dangling ','", toks.back());
      cur_.reset();
    } else if (kw == "once") {
      if (arrow) syntax("'once' cannot take a '->' target", head);
      need(3);
      const auto& o = once_name(toks[1]);
      if (toks[2].text != "{") syntax("expected '{'", toks[2]);
      expect_end(toks, 3);
      NodeId from = ensure_cur();
      NodeId guard = new_node();
      prog_.add_edge({from, Action::start_once(o), guard, line_});
      NodeId body = new_node();
      prog_.add_edge({guard, Action::neg_ran(o), body, line_});
      once_stack_.push_back({guard, o, line_});
      cur_ = body;
    } else if (toks.size() >= 3 && toks[1].text == "=") {
      expect_end(toks, 3);
      assignment(toks[0], toks[2], arrow);
    } else {
      syntax("unknown statement '" + kw + "'", head);
    }
  }

  void assignment(const Token& lhs, const Token& rhs, const std::optional<Token>& arrow) {
    if (lhs.kind != Token::Ident || is_keyword(lhs.text)) syntax("expected variable", lhs);
    if (rhs.kind == Token::Punct || (rhs.kind == Token::Ident && is_keyword(rhs.text)))
      syntax("expected variable or constant", rhs);
    bool lg = prog_.globals.count(lhs.text) > 0;
    bool rg = rhs.kind == Token::Ident && prog_.globals.count(rhs.text) > 0;
    if (lg && rg) invalid("copy between two globals is not an access; go through a local", lhs.column);
    if (lg) {
      emit(Action::write(lhs.text, rhs.text), arrow);
    } else if (rg) {
      emit(Action::read(rhs.text, lhs.text), arrow);
    } else {
      invalid("assignment '" + lhs.text + " = " + rhs.text + "' touches no declared global", lhs.column);
    }
  }

  void bind_label(const Token& name) {
    if (labels_.count(name.text)) invalid("duplicate node label '" + name.text + "'", name.column);
    NodeId n;
    if (cur_ && !has_out(*cur_) && !labeled_.count(*cur_)) {
      n = *cur_;
    } else {
      n = new_node();
    }
    labels_[name.text] = n;
    labeled_.insert(n);
    cur_ = n;
  }

  void close_once(const Token& brace) {
    if (once_stack_.empty()) syntax("unmatched '}'", brace);
    OnceFrame f = once_stack_.back();
    once_stack_.pop_back();
    NodeId join = ensure_cur();
    prog_.add_edge({f.guard_node, Action::pos_ran(f.var), join, f.line});
    NodeId after = new_node();
    prog_.add_edge({join, Action::end_once(f.var), after, line_});
    cur_ = after;
  }

  void finish_prototype() {
    if (!proto_) return;
    if (!once_stack_.empty()) throw SyntaxError("unterminated 'once' block", once_stack_.back().line, 1);
    for (const auto& p : pending_) {
      auto it = labels_.find(p.label);
      if (it == labels_.end()) throw ValidationError("unknown label '" + p.label + "'", p.line, p.column);
      prog_.edges[p.edge].target = it->second;
    }
    auto& proto = prog_.prototypes[*proto_];
    // every sink gets the thread-exit action that joins observe
    std::set<NodeId> has_out, exit_targets;
    std::set<NodeId> nodes;
    for (NodeId n = 0; n < prog_.node_count(); ++n)
      if (prog_.node_owner[n] == *proto_) nodes.insert(n);
    for (EdgeId e : proto.edges) {
      has_out.insert(prog_.edges[e].source);
      if (prog_.edges[e].action.kind == ActionKind::ThreadExit) exit_targets.insert(prog_.edges[e].target);
    }
    for (NodeId n : nodes) {
      if (has_out.count(n) || exit_targets.count(n)) continue;
      NodeId t = new_node();
      prog_.add_edge({n, Action::thread_exit(), t, 0});
    }
    proto_.reset();
    cur_.reset();
    labels_.clear();
    labeled_.clear();
    pending_.clear();
  }

  void finish_program() {
    int next = 1;
    for (auto [edge, line] : auto_handles_) {
      std::string h;
      do h = "_c" + std::to_string(next++);
      while (handles_.count(h));
      handles_.insert(h);
      prog_.edges[edge].action.aux = h;
    }
    prog_.reindex();
    validate();
  }

  void validate() {
    int mains = 0;
    for (const auto& p : prog_.prototypes)
      if (p.label == kMainLabel) ++mains;
    if (mains != 1) throw ValidationError("exactly one prototype must be labeled 'main'");
    for (const auto& [label, line, col] : create_refs_)
      if (!prog_.find_prototype(label)) throw ValidationError("create of unknown prototype '" + label + "'", line, col);
    for (std::uint32_t pi = 0; pi < prog_.prototypes.size(); ++pi) {
      const auto& p = prog_.prototypes[pi];
      if (!prog_.in_edges(p.start).empty())
        throw ValidationError("start node of '" + p.label + "' has incoming edges",
                              prog_.edges[prog_.in_edges(p.start).front()].line);
      std::vector<bool> seen(prog_.node_count(), false);
      std::vector<NodeId> stack{p.start};
      seen[p.start] = true;
      while (!stack.empty()) {
        NodeId n = stack.back();
        stack.pop_back();
        for (EdgeId e : prog_.out_edges(n)) {
          NodeId t = prog_.edges[e].target;
          if (!seen[t]) {
            seen[t] = true;
            stack.push_back(t);
          }
        }
      }
      for (NodeId n = 0; n < prog_.node_count(); ++n) {
        if (prog_.node_owner[n] != pi || seen[n]) continue;
        int line = 0;
        for (EdgeId e : prog_.out_edges(n)) line = prog_.edges[e].line;
        throw ValidationError("unreachable code in '" + p.label + "'", line);
      }
    }
    for (const auto& e : prog_.edges) {
      const auto& a = e.action;
      if (a.kind == ActionKind::ThreadExit && !prog_.out_edges(e.target).empty())
        throw ValidationError("statements after 'exit'", e.line);
      if (a.kind == ActionKind::Join) {
        auto ce = prog_.create_edge(a.target);
        if (!ce) throw ValidationError("join of unknown thread handle '" + a.target + "'", e.line);
        if (prog_.node_owner[prog_.edges[*ce].source] != prog_.node_owner[e.source])
          throw ValidationError("join of handle '" + a.target + "' created by another prototype", e.line);
      }
      if (a.kind == ActionKind::PosRan || a.kind == ActionKind::NegRan) {
        const auto& in = prog_.in_edges(e.source);
        bool ok = !in.empty();
        for (EdgeId i : in) {
          const auto& ia = prog_.edges[i].action;
          ok = ok && ia.kind == ActionKind::StartO && ia.target == a.target;
        }
        if (!ok) throw ValidationError("'ran(" + a.target + ")' guard must directly follow 'starto " + a.target + "'", e.line);
      }
    }
  }
};

}  // namespace detail

inline Program parse_program(std::string_view text) { return detail::Parser(text).run(); }

}  // namespace digestrace
