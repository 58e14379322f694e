#include <gtest/gtest.h>

#include "common.hpp"
#include "digestrace/oracle.hpp"
#include "digestrace/parser.hpp"

using namespace digestrace;

namespace {

Program load(const std::string& text) { return instrument_atomicity(parse_program(text)); }

std::set<std::pair<int, int>> racy_lines(const Program& p, const std::vector<RacyPair>& rs) {
  std::set<std::pair<int, int>> s;
  for (const auto& r : rs) s.emplace(std::minmax(p.edges[r.a].line, p.edges[r.b].line));
  return s;
}

EdgeId access_at_line(const Program& p, int line) {
  for (const auto& s : access_sites(p))
    if (s.line == line) return s.edge;
  throw std::out_of_range("no access on line " + std::to_string(line));
}

}  // namespace

TEST(Trace, InitialTrace) {
  auto t = initial_trace();
  ASSERT_EQ(t.lanes.size(), 1u);
  EXPECT_TRUE(t.ego.empty());
  EXPECT_EQ(t.event_count(), 0u);
  auto p = load("main:\n  skip\n");
  EXPECT_FALSE(check_trace_invariants(p, t));
}

TEST(Trace, LocalStepGuards) {
  auto p = load("mutex a\nmain:\n  unlock a\n");
  EXPECT_FALSE(trace_step_local(p, 0, initial_trace()));  // unlock without holding
  auto q = load("mutex a\nmain:\n  init a\n  init a\n");
  auto t1 = trace_step_local(q, 0, initial_trace());
  ASSERT_TRUE(t1);
  EXPECT_FALSE(trace_step_local(q, 1, *t1));  // second init of the same mutex
  EXPECT_THROW(trace_step_local(load("mutex a\nmain:\n  lock a\n"), 0, initial_trace()), std::logic_error);
}

TEST(Trace, LockObservesLatestRelease) {
  auto p = load("mutex a\nmain:\n  init a\n  lock a\n  unlock a\n  lock a\n");
  auto t1 = trace_step_local(p, 0, initial_trace());
  ASSERT_TRUE(t1);
  auto t2 = trace_step_observing(p, 1, *t1, *t1);
  ASSERT_TRUE(t2);
  auto t3 = trace_step_local(p, 2, *t2);
  ASSERT_TRUE(t3);
  // relocking can only observe the unlock, not the consumed init
  EXPECT_FALSE(trace_step_observing(p, 3, *t3, *t1));
  EXPECT_TRUE(trace_step_observing(p, 3, *t3, *t3));
}

TEST(Oracle, SingleThreadHasNoRace) {
  auto p = load(corpus_source("single_thread"));
  auto ts = enumerate_traces(p);
  EXPECT_FALSE(ts.bound_exceeded);
  EXPECT_TRUE(find_racy_pairs(p, ts).empty());
  for (const auto& t : ts.traces) EXPECT_EQ(t.lanes.size(), 1u);
}

TEST(Oracle, UnsynchronizedWritesRace) {
  auto p = load(corpus_source("prog0lt"));
  auto ts = enumerate_traces(p);
  EXPECT_FALSE(ts.bound_exceeded);
  auto r = find_racy_pairs(p, ts);
  EXPECT_EQ(racy_lines(p, r), (std::set<std::pair<int, int>>{{6, 9}}));
  EXPECT_TRUE(bidirectionally_compatible(p, ts, access_at_line(p, 6), access_at_line(p, 9)));
}

TEST(Oracle, RunningExampleIsRaceFree) {
  auto p = load(corpus_source("prog1"));
  auto ts = enumerate_traces(p);
  EXPECT_FALSE(ts.bound_exceeded);
  EXPECT_TRUE(find_racy_pairs(p, ts).empty());
  for (auto [x, y] : std::vector<std::pair<int, int>>{{7, 10}, {7, 15}, {10, 15}})
    EXPECT_FALSE(bidirectionally_compatible(p, ts, access_at_line(p, x), access_at_line(p, y))) << x << "/" << y;
}

TEST(Oracle, RunningExampleTraceShape) {
  // some trace of t1 after its write has all three threads' history: main's
  // init/create prefix, t1's lock observing main's unlock, and the write
  auto p = load(corpus_source("prog1"));
  auto ts = enumerate_traces(p, {30, 2});
  bool found = false;
  for (const auto& t : ts.traces) {
    if (t.ego.empty() || t.lanes.size() != 2) continue;
    const auto& ego = t.ego_lane();
    bool wrote = false, after_main = false;
    for (const auto& s : ego.steps) {
      const auto& a = p.edges[s.edge].action;
      if (a.kind == ActionKind::Lock && a.target == "a" && s.observed && s.observed->inst.empty() &&
          p.edges[t.lanes[0].steps[s.observed->seq - 1].edge].action.kind == ActionKind::Unlock)
        after_main = true;
      if (a.kind == ActionKind::WriteGlobal) wrote = true;
    }
    found |= wrote && after_main;
  }
  EXPECT_TRUE(found);
}

TEST(Oracle, SameThreadDoubleWriteNoRace) {
  auto p = load("global g\nmain:\n  g = 1\n  g = 2\n");
  auto ts = enumerate_traces(p);
  EXPECT_TRUE(find_racy_pairs(p, ts).empty());
  EXPECT_FALSE(bidirectionally_compatible(p, ts, access_at_line(p, 3), access_at_line(p, 4)));
}

TEST(Oracle, JoinOrders) {
  auto p = load(corpus_source("join_after_create"));
  auto ts = enumerate_traces(p);
  EXPECT_FALSE(ts.bound_exceeded);
  EXPECT_TRUE(find_racy_pairs(p, ts).empty());
}

TEST(Oracle, OnceOrders) {
  auto p = load(corpus_source("once_init"));
  EXPECT_TRUE(find_racy_pairs(p, enumerate_traces(p)).empty());
  auto q = load(corpus_source("once_partial"));
  auto r = find_racy_pairs(q, enumerate_traces(q));
  EXPECT_EQ(racy_lines(q, r), (std::set<std::pair<int, int>>{{8, 12}}));
}

TEST(Oracle, UninitializedMutexBlocks) {
  auto p = load(corpus_source("uninit_mutex"));
  auto ts = enumerate_traces(p);
  for (const auto& t : ts.traces)
    for (const auto& l : t.lanes)
      for (const auto& s : l.steps) EXPECT_NE(p.edges[s.edge].action.kind, ActionKind::WriteGlobal);
}

TEST(Oracle, BoundsTruncate) {
  auto p = load(corpus_source("create_loop"));
  EXPECT_TRUE(enumerate_traces(p).bound_exceeded);
  auto q = load(corpus_source("prog1"));
  EXPECT_TRUE(enumerate_traces(q, {4, 4}).bound_exceeded);
  EXPECT_TRUE(enumerate_traces(q, {40, 1}).bound_exceeded);
}

TEST(Oracle, TracesAreWellFormedAndDeduplicated) {
  for (const char* name : {"prog1", "once_init", "join_transitive", "lockset_overlap", "twin_creates"}) {
    auto p = load(corpus_source(name));
    auto ts = enumerate_traces(p);
    std::set<std::string> keys;
    for (const auto& t : ts.traces) {
      EXPECT_FALSE(check_trace_invariants(p, t)) << name;
      EXPECT_TRUE(keys.insert(t.key()).second) << name;
    }
    for (const auto& s : ts.steps) {
      ASSERT_LT(s.from, ts.traces.size());
      ASSERT_LT(s.result, ts.traces.size());
    }
  }
}

TEST(Oracle, Deterministic) {
  auto p = load(corpus_source("lock_contention"));
  auto a = enumerate_traces(p);
  auto b = enumerate_traces(p);
  ASSERT_EQ(a.traces.size(), b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) EXPECT_EQ(a.traces[i].key(), b.traces[i].key());
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Oracle, TraceDot) {
  auto p = load(corpus_source("prog0lt"));
  auto ts = enumerate_traces(p);
  const auto& t = ts.traces.back();
  auto dot = trace_to_dot(p, t);
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_NE(dot.find("main"), std::string::npos);
}
