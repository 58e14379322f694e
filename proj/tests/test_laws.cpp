#include <gtest/gtest.h>

#include "common.hpp"
#include "digestrace/digests/mutants.hpp"
#include "digestrace/laws.hpp"
#include "digestrace/parser.hpp"

using namespace digestrace;

namespace {

struct Case {
  Program p;
  TraceSet ts;
};

Case load(const std::string& name) {
  Case c{instrument_atomicity(parse_program(corpus_source(name))), {}};
  c.ts = enumerate_traces(c.p);
  return c;
}

std::string violations(const LawReport& r) {
  std::string s;
  for (const auto& v : r.violations) s += v.law + ": " + v.detail + "\n";
  return s;
}

bool has_law(const LawReport& r, const std::string& law) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const LawViolation& v) { return v.law == law; });
}

class ShippedDigests : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(ShippedDigests, AdmissibleAndStable) {
  auto c = load(GetParam());
  for (const auto& n : digest_names()) {
    auto d = make_digest(n);
    auto adm = check_admissibility(*d, c.p, c.ts);
    EXPECT_TRUE(adm.ok()) << n << "\n" << violations(adm);
    EXPECT_GT(adm.checked, 0u);
    auto st = check_access_stability(*d, c.p, c.ts);
    EXPECT_TRUE(st.ok()) << n << "\n" << violations(st);
  }
  auto prod = make_product(digest_names());
  EXPECT_TRUE(check_admissibility(*prod, c.p, c.ts).ok());
  EXPECT_TRUE(check_access_stability(*prod, c.p, c.ts).ok());
}

INSTANTIATE_TEST_SUITE_P(Corpus, ShippedDigests,
                         ::testing::Values("prog1", "prog0lt", "once_init", "join_transitive", "join_loop",
                                           "lockset_overlap", "nested_create", "early_exit"));

TEST(Laws, InitializationMatchesEmptyTrace) {
  auto c = load("empty_main");
  for (const auto& n : digest_names()) {
    auto d = make_digest(n);
    auto init = d->init_digests();
    ASSERT_EQ(init.size(), 1u);
    EXPECT_EQ(init[0], d->abstract_trace(c.p, initial_trace())) << n;
  }
}

TEST(Laws, IntersectingLocksetMutantIsInadmissible) {
  auto c = load("prog1");
  LocksetIntersectMutant m;
  auto r = check_admissibility(m, c.p, c.ts);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_law(r, "simulation")) << violations(r);
}

TEST(Laws, StickyThreadFlagBreaksSimulation) {
  auto c = load("prog0lt");
  ThreadFlagStickyMutant m;
  EXPECT_TRUE(has_law(check_admissibility(m, c.p, c.ts), "simulation"));
}

TEST(Laws, AlwaysUniqueTidBreaksCreation) {
  auto c = load("create_loop");
  TidAlwaysUniqueMutant m;
  EXPECT_TRUE(has_law(check_admissibility(m, c.p, c.ts), "creation"));
}

TEST(Laws, OnceForgetfulBreaksSimulation) {
  auto c = load("once_init");
  OnceForgetfulMutant m;
  EXPECT_FALSE(check_admissibility(m, c.p, c.ts).ok());
}

TEST(Laws, JoinNonUniqueBreaksSimulation) {
  auto c = load("join_loop");
  JoinNonUniqueMutant m;
  EXPECT_FALSE(check_admissibility(m, c.p, c.ts).ok());
}

TEST(Laws, AccessStabilityDetectsLeakingDigest) {
  // a digest that counts lock operations changes across lock; access; unlock
  struct Counter : Digest<Counter, int> {
    std::string name() const override { return "counter"; }
    std::vector<int> init() const { return {0}; }
    std::optional<int> fresh(const int&, const Action&) const { return 0; }
    std::optional<int> local(const Action&, const int& n) const { return n; }
    std::optional<int> observe(const Action& a, const int& n, const int&) const {
      return a.kind == ActionKind::Lock ? std::min(n + 1, 3) : n;
    }
    Verdict may_parallel(const std::string&, const int&, const int&) const { return Verdict::Top; }
    int alpha(const Program& p, const LocalTrace& t) const {
      int n = 0;
      for (const auto& s : t.ego_lane().steps) n += p.edges[s.edge].action.kind == ActionKind::Lock;
      return std::min(n, 3);
    }
    std::string describe(const int& n) const { return std::to_string(n); }
  };
  auto c = load("prog0lt");
  Counter d;
  EXPECT_TRUE(check_admissibility(d, c.p, c.ts).ok());
  auto r = check_access_stability(d, c.p, c.ts);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_law(r, "access-stability"));
}
