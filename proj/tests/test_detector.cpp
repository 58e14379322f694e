#include <gtest/gtest.h>

#include "common.hpp"
#include "digestrace/detector.hpp"
#include "digestrace/oracle.hpp"

using namespace digestrace;

namespace {

using LinePairs = std::set<std::pair<int, int>>;

LinePairs lines(const RaceReport& r) {
  LinePairs s;
  for (const auto& f : r.races) s.emplace(f.a.line, f.b.line);
  return s;
}

LinePairs flagged(const std::string& name, const std::string& digests, PredicateMode m = PredicateMode::Bespoke) {
  return lines(analyze(corpus_source(name), parse_digest_list(digests), m).report);
}

}  // namespace

TEST(Detect, RunningExampleCombinations) {
  EXPECT_TRUE(flagged("prog1", "lockset,threadflag").empty());
  EXPECT_TRUE(flagged("prog1", "lockset,tid").empty());
  // lockset alone: the unprotected first write against everything
  EXPECT_EQ(flagged("prog1", "lockset"), (LinePairs{{7, 7}, {7, 10}, {7, 15}}));
  // threadflag alone: main's own writes are excluded, t1's are not
  EXPECT_EQ(flagged("prog1", "threadflag"), (LinePairs{{10, 15}, {15, 15}}));
}

TEST(Detect, GenericLocksetLosesCommonMutex) {
  auto b = flagged("prog1", "lockset", PredicateMode::Bespoke);
  auto g = flagged("prog1", "lockset", PredicateMode::Generic);
  LinePairs diff;
  std::set_difference(g.begin(), g.end(), b.begin(), b.end(), std::inserter(diff, diff.end()));
  EXPECT_TRUE(diff.count({10, 15}));
  EXPECT_TRUE(std::includes(g.begin(), g.end(), b.begin(), b.end()));
}

TEST(Detect, RacyProgram) {
  for (const auto& ds : {"lockset", "threadflag", "tid", "lockset,threadflag,tid,join,once"}) {
    auto f = flagged("prog0lt", ds);
    EXPECT_TRUE(f.count({6, 9})) << ds;
  }
  EXPECT_EQ(flagged("prog0lt", "tid"), (LinePairs{{6, 9}}));
}

TEST(Detect, OnceProvesRaceFreedom) {
  EXPECT_TRUE(flagged("once_init", "once").empty());
  EXPECT_FALSE(flagged("once_init", "lockset,threadflag,tid,join").empty());
}

TEST(Detect, JoinNeedsTid) {
  EXPECT_TRUE(flagged("join_after_create", "tid,join").empty());
  EXPECT_FALSE(flagged("join_after_create", "tid").empty());
  EXPECT_TRUE(flagged("join_transitive", "tid,join").empty());
  EXPECT_FALSE(flagged("join_loop", "tid,join").empty());
}

TEST(Detect, SoundAgainstOracle) {
  for (const char* name : {"prog0lt", "branch_lock", "two_globals", "join_other_handle", "once_partial"}) {
    auto p = instrument_atomicity(parse_program(corpus_source(name)));
    auto ts = enumerate_traces(p);
    std::set<std::pair<NodeId, NodeId>> truth;
    for (const auto& r : find_racy_pairs(p, ts))
      truth.emplace(std::minmax(p.edges[r.a].source, p.edges[r.b].source));
    ASSERT_FALSE(truth.empty()) << name;
    for (auto mode : {PredicateMode::Bespoke, PredicateMode::Generic}) {
      auto a = analyze(p, digest_names(), mode);
      std::set<std::pair<NodeId, NodeId>> got;
      for (const auto& f : a.report.races) got.emplace(f.a.node, f.b.node);
      for (const auto& t : truth) EXPECT_TRUE(got.count(t)) << name;
    }
  }
}

TEST(Detect, ReportFormats) {
  auto a = analyze(corpus_source("prog0lt"), {"tid"});
  auto j = a.report.to_json();
  EXPECT_EQ(j["schema"], "digestrace-report");
  EXPECT_EQ(j["version"], kReportVersion);
  ASSERT_EQ(j["races"].size(), 1u);
  EXPECT_EQ(j["races"][0]["global"], "g");
  EXPECT_EQ(j["races"][0]["a"]["line"], 6);
  EXPECT_EQ(j["races"][0]["b"]["line"], 9);
  EXPECT_EQ(j["summary"]["flagged"], 1);
  EXPECT_EQ(a.report.to_text().rfind("race on g: line 6 (W) <-> line 9 (W)\n", 0), 0u);
  EXPECT_EQ(j.dump(), analyze(corpus_source("prog0lt"), {"tid"}).report.to_json().dump());
}

TEST(Detect, ModesArity) {
  auto a = analyze(corpus_source("prog1"), {"lockset", "tid"});
  EXPECT_THROW(detect(a.solution, *a.digest, std::vector<PredicateMode>{PredicateMode::Bespoke}), ArityMismatch);
  auto all_off = detect(a.solution, *a.digest, {PredicateMode::Disabled, PredicateMode::Disabled});
  EXPECT_EQ(all_off.races.size(), all_off.candidate_pairs);
}

TEST(Detect, ReadOnlyNeverFlagged) {
  auto a = analyze(corpus_source("read_only"), {"lockset"});
  EXPECT_TRUE(a.report.race_free());
  EXPECT_EQ(a.report.candidate_pairs, 0u);
}

TEST(Ablate, MonotoneAndConsistent) {
  for (const char* name : {"prog1", "prog0lt", "once_init", "join_transitive"}) {
    auto rows = ablate(parse_program(corpus_source(name)));
    ASSERT_EQ(rows.size(), 32u);
    EXPECT_TRUE(monotonicity_violations(rows).empty()) << name;
    for (const auto& r : rows) EXPECT_LE(r.flagged_bespoke, r.flagged_generic) << name;
    EXPECT_EQ(rows.front().flagged_bespoke, rows.front().flagged_generic);
  }
  auto rows = ablate(parse_program(corpus_source("prog1")));
  EXPECT_EQ(rows[0b00011].flagged_bespoke, 0u);  // lockset + threadflag
  EXPECT_EQ(subset_name(rows[0b00101].enabled), "lockset+tid");
  auto j = ablation_to_json(rows);
  EXPECT_EQ(j["rows"].size(), 32u);
}
