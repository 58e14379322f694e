// Acceptance checks, one line per criterion. Exit status is the number of
// failing criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "digestrace/conformance.hpp"

using namespace digestrace;

namespace {

using LinePairs = std::set<std::pair<int, int>>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string show(const LinePairs& s) {
  std::string out = "{";
  for (const auto& [a, b] : s) out += (out.size() > 1 ? " " : "") + std::to_string(a) + "/" + std::to_string(b);
  return out + "}";
}

LinePairs lines(const RaceReport& r) {
  LinePairs s;
  for (const auto& f : r.races) s.emplace(f.a.line, f.b.line);
  return s;
}

LinePairs run(const std::string& source, const std::vector<std::string>& ds, PredicateMode m = PredicateMode::Bespoke) {
  return lines(analyze(source, ds, m).report);
}

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [" << what << "]";
    }
  }
};

Outcome criterion1() {
  Outcome o;
  auto t0 = Clock::now();
  auto src = corpus_source("prog1");
  auto ltf = run(src, {"lockset", "threadflag"});
  auto ltid = run(src, {"lockset", "tid"});
  auto l = run(src, {"lockset"});
  auto tf = run(src, {"threadflag"});
  double dt = seconds_since(t0);
  o.detail << "L+TF=" << ltf.size() << " L+TID=" << ltid.size() << " L=" << l.size() << show(l)
           << " TF=" << tf.size() << show(tf) << " " << dt << "s";
  o.require(ltf.empty(), "L+TF must flag 0");
  o.require(ltid.empty(), "L+TID must flag 0");
  o.require(l.size() == 2, "L must flag exactly 2");
  o.require(tf.size() == 3, "TF must flag exactly 3");
  o.require(dt < 1.0, "runtime");
  return o;
}

Outcome criterion2() {
  Outcome o;
  auto t0 = Clock::now();
  auto src = corpus_source("prog0lt");
  auto p = instrument_atomicity(parse_program(src));
  auto ts = enumerate_traces(p);
  auto racy = find_racy_pairs(p, ts);
  o.require(!ts.bound_exceeded && racy.size() == 1, "oracle must confirm exactly one race");
  std::size_t off = 0;
  std::string bad;
  for (const auto& subset : detail::product_subsets()) {
    auto f = run(src, subset);
    if (f.size() != 1) {
      ++off;
      bad += " " + subset_name(subset) + "=" + std::to_string(f.size());
    }
  }
  double dt = seconds_since(t0);
  o.detail << "oracle races=" << racy.size() << ", subsets not flagging exactly 1: " << off << bad << " " << dt << "s";
  o.require(off == 0, "exactly 1 under every subset");
  o.require(dt < 1.0, "runtime");
  return o;
}

Outcome criterion3() {
  Outcome o;
  auto t0 = Clock::now();
  auto src = corpus_source("once_init");
  auto p = instrument_atomicity(parse_program(src));
  auto ts = enumerate_traces(p);
  auto racy = find_racy_pairs(p, ts);
  std::size_t with_once_flagging = 0, without_once_clean = 0;
  for (const auto& subset : detail::product_subsets()) {
    bool has_once = std::find(subset.begin(), subset.end(), "once") != subset.end();
    auto f = run(src, subset);
    if (has_once && !f.empty()) ++with_once_flagging;
    if (!has_once && f.empty()) ++without_once_clean;
  }
  double dt = seconds_since(t0);
  o.detail << "oracle races=" << racy.size() << ", subsets with once that flag: " << with_once_flagging
           << ", subsets without once that prove freedom: " << without_once_clean << " " << dt << "s";
  o.require(!ts.bound_exceeded && racy.empty(), "oracle must find the program race-free");
  o.require(with_once_flagging == 0, "once proves race freedom");
  o.require(without_once_clean == 0, "flagged without once");
  o.require(dt < 5.0, "runtime");
  return o;
}

Outcome criterion4() {
  Outcome o;
  auto src = corpus_source("prog1");
  auto b = run(src, {"lockset"}, PredicateMode::Bespoke);
  auto g = run(src, {"lockset"}, PredicateMode::Generic);
  LinePairs diff;
  std::set_difference(g.begin(), g.end(), b.begin(), b.end(), std::inserter(diff, diff.end()));
  // the two writes under mutex a, paired with each other and with themselves
  const LinePairs want{{10, 10}, {10, 15}, {15, 15}};
  o.detail << "generic=" << show(g) << " bespoke=" << show(b) << " difference=" << show(diff);
  o.require(diff == want, "difference must be " + show(want));
  o.require(std::includes(g.begin(), g.end(), b.begin(), b.end()), "bespoke at least as precise");
  return o;
}

Outcome criterion5(const std::vector<PreparedCase>& cases) {
  Outcome o;
  auto t0 = Clock::now();
  auto laws = run_law_suite(cases, shipped_digests());
  LocksetIntersectMutant m;
  bool mutant_rejected = false;
  for (const auto& c : cases) mutant_rejected |= !check_admissibility(m, c.program, c.traces).ok();
  double dt = seconds_since(t0);
  o.detail << "violations=" << laws.failures() << " over " << cases.size() << " cases, mutant rejected="
           << (mutant_rejected ? "yes" : "no") << " " << dt << "s";
  o.require(laws.ok(), "shipped digests lawful");
  o.require(mutant_rejected, "mutant lockset inadmissible");
  o.require(dt < 60.0, "runtime");
  return o;
}

Outcome criterion6(const std::vector<PreparedCase>& cases) {
  Outcome o;
  std::vector<PreparedCase> exhaustive;
  for (const auto& c : cases)
    if (!c.traces.bound_exceeded) exhaustive.push_back(c);
  auto r = run_equivalence_suite(exhaustive);
  std::size_t agree = 0;
  for (const auto& c : r.cases) agree += c.ok();
  o.detail << agree << "/" << r.cases.size() << " exhaustive cases agree";
  o.require(r.ok() && !r.cases.empty(), "all cases agree");
  return o;
}

Outcome criterion7(const std::vector<PreparedCase>& cases) {
  Outcome o;
  auto r = run_soundness_suite(cases);
  std::size_t checks = 0;
  for (const auto& c : r.cases) checks += c.checks;
  o.detail << r.failures() << " failures in " << checks << " checks over " << r.cases.size() << " cases";
  o.require(r.ok(), "no false negatives, monotone ablation");
  return o;
}

Outcome criterion8() {
  Outcome o;
  auto corpus = load_corpus(corpus_dir());
  auto a = run_conformance(corpus).to_json().dump(2);
  auto b = run_conformance(corpus).to_json().dump(2);
  o.detail << "report of " << a.size() << " bytes, runs " << (a == b ? "identical" : "differ");
  o.require(a == b, "byte-identical");
  return o;
}

}  // namespace

int main() {
  auto corpus = load_corpus(corpus_dir());
  auto cases = prepare_all(corpus);
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"running example", criterion1},
      {"racy micro-benchmark", criterion2},
      {"once", criterion3},
      {"generic vs bespoke", criterion4},
      {"law suite", [&] { return criterion5(cases); }},
      {"equivalence", [&] { return criterion6(cases); }},
      {"soundness", [&] { return criterion7(cases); }},
      {"determinism", criterion8},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " exception: " << e.what();
    }
    failed += !o.ok;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.ok ? "PASS" : "FAIL") << " - "
              << o.detail.str() << '\n';
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria pass\n";
  return failed;
}
