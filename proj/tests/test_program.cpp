#include <gtest/gtest.h>

#include "common.hpp"
#include "digestrace/conformance.hpp"
#include "digestrace/instrument.hpp"
#include "digestrace/parser.hpp"
#include "digestrace/printer.hpp"

using namespace digestrace;

namespace {

std::size_t count_kind(const Program& p, ActionKind k) {
  std::size_t n = 0;
  for (const auto& e : p.edges) n += e.action.kind == k;
  return n;
}

}  // namespace

TEST(Parser, RunningExample) {
  auto p = parse_program(corpus_source("prog1"));
  EXPECT_EQ(p.prototypes.size(), 2u);
  EXPECT_EQ(p.globals, (std::set<std::string>{"g"}));
  EXPECT_EQ(p.mutexes, (std::set<std::string>{"a"}));
  EXPECT_EQ(count_kind(p, ActionKind::WriteGlobal), 3u);
  EXPECT_EQ(count_kind(p, ActionKind::Create), 1u);
  EXPECT_FALSE(p.instrumented);
  auto ce = p.create_edge("h");
  ASSERT_TRUE(ce);
  EXPECT_EQ(p.edges[*ce].action.target, "t1");
  EXPECT_EQ(p.edges[*ce].line, 8);
}

TEST(Parser, AccessDirection) {
  auto p = parse_program("global g\nmain:\n  g = x\n  y = g\n");
  ASSERT_GE(p.edges.size(), 2u);
  EXPECT_EQ(p.edges[0].action, Action::write("g", "x"));
  EXPECT_EQ(p.edges[1].action, Action::read("g", "y"));
  EXPECT_EQ(p.edges[1].line, 4);
}

TEST(Parser, OnceBlockIsLowered) {
  auto p = parse_program(corpus_source("once_init"));
  EXPECT_EQ(count_kind(p, ActionKind::StartO), 2u);
  EXPECT_EQ(count_kind(p, ActionKind::PosRan), 2u);
  EXPECT_EQ(count_kind(p, ActionKind::NegRan), 2u);
  EXPECT_EQ(count_kind(p, ActionKind::EndO), 2u);
}

TEST(Parser, GotoAndExplicitTargets) {
  auto p = parse_program("global g\nmain:\n  skip -> b\n  a:\n  g = 1\n  b:\n  goto a, c\n  c:\n  exit\n");
  EXPECT_EQ(count_kind(p, ActionKind::Skip), 3u);  // goto lowers to one skip per target
  EXPECT_EQ(count_kind(p, ActionKind::ThreadExit), 1u);
}

TEST(Parser, SyntaxErrorsCarryPosition) {
  try {
    parse_program("global g\nmain:\n  g = = 1\n");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 0);
  }
  EXPECT_THROW(parse_program("main:\n  lock\n"), SyntaxError);
  EXPECT_THROW(parse_program("main:\n  create t as\n"), SyntaxError);
  EXPECT_THROW(parse_program("main:\n  }\n"), SyntaxError);
  EXPECT_THROW(parse_program("main:\n  frobnicate x\n"), SyntaxError);
}

TEST(Parser, ValidationErrors) {
  EXPECT_THROW(parse_program("t:\n  skip\n"), ValidationError);                     // no main
  EXPECT_THROW(parse_program("main:\n  create nobody as h\n"), ValidationError);    // unknown prototype
  EXPECT_THROW(parse_program("main:\n  goto nowhere\n"), ValidationError);          // unknown label
  EXPECT_THROW(parse_program("main:\n  join h\n"), ValidationError);                // unknown handle
  EXPECT_THROW(parse_program("main:\n  x = g\n"), ProgramError);                    // undeclared global
  EXPECT_THROW(parse_program("mutex m_g\nglobal g\nmain:\n  lock m_g\n"), ProgramError);
}

TEST(Parser, JoinOfForeignHandleRejected) {
  EXPECT_THROW(parse_program("main:\n  create t as h\n  join k\nt:\n  create u as k\nu:\n  skip\n"),
               ValidationError);
}

TEST(Printer, RoundTripsCorpus) {
  for (const auto& c : load_corpus(corpus_dir())) {
    auto p = parse_program(c.source);
    auto text = print_program(p);
    Program q;
    ASSERT_NO_THROW(q = parse_program(text)) << c.name << "\n" << text;
    EXPECT_TRUE(structurally_equal(p, q)) << c.name << "\n" << text;
    EXPECT_EQ(print_program(q), text) << c.name;
  }
}

TEST(Printer, DotExport) {
  auto dot = program_to_dot(instrument_atomicity(parse_program(corpus_source("prog1"))));
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_NE(dot.find("lock m_g"), std::string::npos);
  EXPECT_NE(dot.find("cluster"), std::string::npos);
  EXPECT_EQ(dot.back(), '\n');
}

TEST(Instrument, WrapsEveryAccess) {
  auto src = parse_program(corpus_source("two_globals"));
  auto p = instrument_atomicity(src);
  EXPECT_TRUE(p.instrumented);
  EXPECT_TRUE(p.mutexes.count("m_g"));
  EXPECT_TRUE(p.mutexes.count("m_k"));
  auto sites = access_sites(p);
  EXPECT_EQ(sites.size(), count_kind(src, ActionKind::WriteGlobal) + count_kind(src, ActionKind::ReadGlobal));
  for (const auto& s : sites) {
    auto seq = access_sequence(p, s.edge);
    auto m = Program::atomicity_mutex(s.global);
    EXPECT_EQ(p.edges[seq.lock].action, Action::lock(m));
    EXPECT_EQ(p.edges[seq.unlock].action, Action::unlock(m));
    EXPECT_EQ(p.edges[seq.lock].target, s.node);
    EXPECT_EQ(access_before_unlock(p, seq.unlock), s.edge);
  }
  // main begins by initializing every atomicity mutex
  auto first = p.out_edges(p.main().start);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(p.edges[first[0]].action.kind, ActionKind::Init);
  EXPECT_THROW(instrument_atomicity(p), ValidationError);
}

TEST(Instrument, OnceVariablesInitializedFirst) {
  auto p = instrument_atomicity(parse_program(corpus_source("once_init")));
  auto first = p.out_edges(p.main().start);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(p.edges[first[0]].action, Action::init_once("o"));
  EXPECT_TRUE(p.in_edges(p.main().start).empty());
}
