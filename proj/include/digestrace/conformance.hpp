#pragma once

// Corpus loading and the suites that tie analyzer, digests and oracle
// together: soundness, digest laws, race-definition equivalence, mutation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "digestrace/detector.hpp"
#include "digestrace/digests/mutants.hpp"
#include "digestrace/laws.hpp"
#include "digestrace/oracle.hpp"

namespace digestrace {

class InconclusiveBounds : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A site pair identified by source lines, lower line first.
struct LinePair {
  std::string global;
  int a = 0;
  int b = 0;
  auto operator<=>(const LinePair&) const = default;
  std::string str() const { return global + "@" + std::to_string(a) + "/" + std::to_string(b); }
};

struct CorpusCase {
  std::string name;
  std::string source;
  std::string description;
  OracleBounds bounds;
  bool truncation_expected = false;
  std::set<LinePair> racy;                             // oracle truth
  std::vector<std::vector<std::string>> race_free_with;  // subsets expected to prove race freedom
};

inline LinePair make_line_pair(std::string g, int x, int y) { return {std::move(g), std::min(x, y), std::max(x, y)}; }

inline CorpusCase load_case(const std::filesystem::path& dir) {
  CorpusCase c;
  c.name = dir.filename().string();
  auto read = [](const std::filesystem::path& f) {
    std::ifstream in(f);
    if (!in) throw CorpusError("cannot read " + f.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  c.source = read(dir / "program.rlp");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read(dir / "expected.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(c.name + "/expected.json: " + e.what());
  }
  c.description = j.value("description", "");
  if (j.contains("bounds")) {
    c.bounds.depth = j["bounds"].value("depth", c.bounds.depth);
    c.bounds.width = j["bounds"].value("width", c.bounds.width);
  }
  c.truncation_expected = j.value("truncation_expected", false);
  for (const auto& p : j.value("racy_pairs", nlohmann::json::array())) {
    const auto& l = p.at("lines");
    c.racy.insert(make_line_pair(p.at("global").get<std::string>(), l.at(0).get<int>(), l.at(1).get<int>()));
  }
  for (const auto& s : j.value("race_free_with", nlohmann::json::array()))
    c.race_free_with.push_back(s.get<std::vector<std::string>>());
  return c;
}

/// All cases below `dir` (one subdirectory each), sorted by name.
inline std::vector<CorpusCase> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw CorpusError("not a corpus directory: " + dir.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && std::filesystem::exists(e.path() / "program.rlp")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<CorpusCase> out;
  for (const auto& d : dirs) out.push_back(load_case(d));
  return out;
}

/// A case with its instrumented program and bounded trace set.
struct PreparedCase {
  const CorpusCase* info = nullptr;
  Program program;
  TraceSet traces;
  std::vector<RacyPair> racy;

  std::set<LinePair> racy_lines() const {
    std::set<LinePair> s;
    for (const auto& r : racy) s.insert(make_line_pair(r.global, program.edges[r.a].line, program.edges[r.b].line));
    return s;
  }
  std::set<std::tuple<std::string, NodeId, NodeId>> racy_sites() const {
    std::set<std::tuple<std::string, NodeId, NodeId>> s;
    for (const auto& r : racy) {
      NodeId a = program.edges[r.a].source, b = program.edges[r.b].source;
      s.emplace(r.global, std::min(a, b), std::max(a, b));
    }
    return s;
  }
  int line_of_site(NodeId n) const {
    for (EdgeId e : program.out_edges(n))
      if (program.edges[e].action.is_access()) return program.edges[e].line;
    return 0;
  }
};

inline PreparedCase prepare(const CorpusCase& c) {
  PreparedCase p;
  p.info = &c;
  p.program = instrument_atomicity(parse_program(c.source));
  p.traces = enumerate_traces(p.program, c.bounds);
  p.racy = find_racy_pairs(p.program, p.traces);
  return p;
}

struct CaseResult {
  std::string name;
  std::size_t checks = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

struct SuiteReport {
  std::string suite;
  std::vector<CaseResult> cases;

  bool ok() const {
    return std::all_of(cases.begin(), cases.end(), [](const CaseResult& c) { return c.ok(); });
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : cases) n += c.failures.size();
    return n;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["suite"] = suite;
    j["ok"] = ok();
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cases)
      arr.push_back({{"case", c.name}, {"ok", c.ok()}, {"checks", c.checks}, {"failures", c.failures}});
    j["cases"] = arr;
    return j;
  }
};

namespace detail {

/// Runs `f` over every prepared case concurrently; results keep corpus order.
template <class F>
std::vector<CaseResult> for_each_case(const std::vector<PreparedCase>& cases, F f) {
  std::vector<std::future<CaseResult>> futs;
  futs.reserve(cases.size());
  for (const auto& c : cases) futs.push_back(std::async(std::launch::async, [&f, &c] { return f(c); }));
  std::vector<CaseResult> out;
  for (auto& fu : futs) out.push_back(fu.get());
  return out;
}

inline std::string site_pair_str(const PreparedCase& c, const std::tuple<std::string, NodeId, NodeId>& s) {
  return make_line_pair(std::get<0>(s), c.line_of_site(std::get<1>(s)), c.line_of_site(std::get<2>(s))).str();
}

/// Valid digest subsets as product configurations (join needs tid).
inline std::vector<std::vector<std::string>> product_subsets() {
  std::vector<std::vector<std::string>> out;
  const auto& names = digest_names();
  for (unsigned mask = 1; mask < (1u << names.size()); ++mask) {
    std::vector<std::string> s;
    for (unsigned i = 0; i < names.size(); ++i)
      if (mask & (1u << i)) s.push_back(names[i]);
    bool join = std::find(s.begin(), s.end(), "join") != s.end();
    bool tid = std::find(s.begin(), s.end(), "tid") != s.end();
    if (join && !tid) continue;
    out.push_back(std::move(s));
  }
  return out;
}

inline void check_superset(CaseResult& r, const PreparedCase& c, const RaceReport& rep, const std::string& config) {
  auto flagged = rep.pair_set();
  for (const auto& s : c.racy_sites()) {
    ++r.checks;
    if (!flagged.count(s)) r.failures.push_back("missed race " + site_pair_str(c, s) + " with " + config);
  }
}

}  // namespace detail

inline std::vector<PreparedCase> prepare_all(const std::vector<CorpusCase>& corpus) {
  std::vector<std::future<PreparedCase>> futs;
  for (const auto& c : corpus) futs.push_back(std::async(std::launch::async, [&c] { return prepare(c); }));
  std::vector<PreparedCase> out;
  for (auto& f : futs) out.push_back(f.get());
  return out;
}

/// Ground truth against the recorded expectations: racy pairs and whether
/// the bounds were exhausted.
inline SuiteReport run_oracle_suite(const std::vector<PreparedCase>& cases) {
  return {"oracle", detail::for_each_case(cases, [](const PreparedCase& c) {
            CaseResult r{c.info->name, 0, {}};
            ++r.checks;
            if (c.traces.bound_exceeded != c.info->truncation_expected)
              r.failures.push_back(c.traces.bound_exceeded ? "enumeration truncated unexpectedly"
                                                           : "enumeration expected to truncate but was exhaustive");
            auto got = c.racy_lines();
            ++r.checks;
            if (got != c.info->racy) {
              std::string g, w;
              for (const auto& p : got) g += p.str() + " ";
              for (const auto& p : c.info->racy) w += p.str() + " ";
              r.failures.push_back("oracle racy pairs {" + g + "} differ from expected {" + w + "}");
            }
            for (const auto& t : c.traces.traces) {
              ++r.checks;
              if (auto e = check_trace_invariants(c.program, t)) {
                r.failures.push_back("malformed trace: " + *e);
                break;
              }
            }
            return r;
          })};
}

/// No false negatives: every oracle race is flagged, for every digest
/// subset (as predicate masks over the full product and as real products)
/// and both predicate modes; masked flag counts are monotone; the analysis
/// reaches every digest the oracle realizes; expected race-free subsets hold.
inline SuiteReport run_soundness_suite(const std::vector<PreparedCase>& cases,
                                       const std::optional<Mutant>& mutant = std::nullopt) {
  for (const auto& c : cases)
    if (c.traces.bound_exceeded && !c.info->truncation_expected)
      throw InconclusiveBounds("case '" + c.info->name + "' exceeds its oracle bounds");

  return {mutant ? "soundness[" + mutant->name + "]" : "soundness",
          detail::for_each_case(cases, [&mutant](const PreparedCase& c) {
            CaseResult r{c.info->name, 0, {}};
            const auto& p = c.program;
            auto full = mutant ? make_product_with(digest_names(), *mutant) : make_product(digest_names());
            Solution sol;
            try {
              sol = solve(p, *full);
            } catch (const Divergence& e) {
              r.failures.push_back(e.what());
              return r;
            }

            // masked predicates over the full product
            const unsigned n = static_cast<unsigned>(digest_names().size());
            std::vector<std::size_t> counts_b(1u << n), counts_g(1u << n);
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
              std::vector<std::string> enabled;
              for (unsigned i = 0; i < n; ++i)
                if (mask & (1u << i)) enabled.push_back(digest_names()[i]);
              auto rb = detect(sol, *full, ablation_modes(mask, PredicateMode::Bespoke));
              auto rg = detect(sol, *full, ablation_modes(mask, PredicateMode::Generic));
              counts_b[mask] = rb.races.size();
              counts_g[mask] = rg.races.size();
              detail::check_superset(r, c, rb, "mask " + subset_name(enabled) + " (bespoke)");
              detail::check_superset(r, c, rg, "mask " + subset_name(enabled) + " (generic)");
            }
            for (unsigned s = 0; s < (1u << n); ++s)
              for (unsigned t = 0; t < (1u << n); ++t) {
                if (s == t || (s & t) != s) continue;
                ++r.checks;
                if (counts_b[t] > counts_b[s] || counts_g[t] > counts_g[s])
                  r.failures.push_back("flag count grows from mask " + std::to_string(s) + " to " + std::to_string(t));
              }

            // each valid subset as its own product
            for (const auto& subset : detail::product_subsets()) {
              auto d = mutant ? make_product_with(subset, *mutant) : make_product(subset);
              Solution s2;
              try {
                s2 = solve(p, *d);
              } catch (const Divergence& e) {
                r.failures.push_back(subset_name(subset) + ": " + e.what());
                continue;
              }
              auto rb = detect(s2, *d, PredicateMode::Bespoke);
              auto rg = detect(s2, *d, PredicateMode::Generic);
              detail::check_superset(r, c, rb, "product " + subset_name(subset) + " (bespoke)");
              detail::check_superset(r, c, rg, "product " + subset_name(subset) + " (generic)");
              for (const auto& want : c.info->race_free_with) {
                if (mutant || want != subset) continue;
                ++r.checks;
                if (!rb.race_free())
                  r.failures.push_back("expected " + subset_name(subset) + " to prove race freedom, " +
                                       std::to_string(rb.races.size()) + " pair(s) flagged");
              }
            }

            // every digest the oracle realizes is reached, every access recorded
            for (const auto& t : c.traces.traces) {
              ++r.checks;
              NodeId u = lane_node(p, t.ego_lane());
              auto a = full->abstract_trace(p, t);
              if (!sol.reachable(u, a)) {
                r.failures.push_back("analysis misses digest " + a.str() + " at node " + std::to_string(u));
                break;
              }
              const auto& steps = t.ego_lane().steps;
              if (steps.empty()) continue;
              EdgeId last = steps.back().edge;
              auto acc = access_before_unlock(p, last);
              if (!acc) continue;
              const auto& recs = sol.accesses[p.edges[*acc].action.target];
              bool found = std::any_of(recs.begin(), recs.end(), [&](const AccessRecord& x) {
                return x.edge == *acc && x.digest == a;
              });
              ++r.checks;
              if (!found) {
                r.failures.push_back("access at line " + std::to_string(p.edges[*acc].line) + " with digest " +
                                     a.str() + " is not recorded");
                break;
              }
            }
            return r;
          })};
}

/// Admissibility and access stability of each digest on every case, plus
/// access stability of the full product.
inline SuiteReport run_law_suite(const std::vector<PreparedCase>& cases, const std::vector<DigestPtr>& digests) {
  return {"laws", detail::for_each_case(cases, [&digests](const PreparedCase& c) {
            CaseResult r{c.info->name, 0, {}};
            auto add = [&](const LawReport& lr) {
              r.checks += lr.checked;
              for (const auto& v : lr.violations) r.failures.push_back(lr.digest + " " + v.law + ": " + v.detail);
            };
            std::vector<DigestPtr> comps;
            for (const auto& d : digests) {
              add(check_admissibility(*d, c.program, c.traces));
              add(check_access_stability(*d, c.program, c.traces));
            }
            if (digests.size() > 1) {
              ProductDigest prod(digests);
              add(check_access_stability(prod, c.program, c.traces));
            }
            return r;
          })};
}

inline std::vector<DigestPtr> shipped_digests() {
  std::vector<DigestPtr> out;
  for (const auto& n : digest_names()) out.push_back(make_digest(n));
  return out;
}

/// Racy pairs coincide with bidirectionally compatible pairs with a write.
inline SuiteReport run_equivalence_suite(const std::vector<PreparedCase>& cases) {
  return {"equivalence", detail::for_each_case(cases, [](const PreparedCase& c) {
            CaseResult r{c.info->name, 0, {}};
            std::set<std::pair<EdgeId, EdgeId>> racy;
            for (const auto& x : c.racy) racy.emplace(x.a, x.b);
            auto sites = access_sites(c.program);
            for (std::size_t i = 0; i < sites.size(); ++i)
              for (std::size_t j = i; j < sites.size(); ++j) {
                const auto& a = sites[i];
                const auto& b = sites[j];
                if (a.global != b.global || (a.type != AccessType::W && b.type != AccessType::W)) continue;
                ++r.checks;
                bool bidir = bidirectionally_compatible(c.program, c.traces, a.edge, b.edge);
                bool is_racy = racy.count({std::min(a.edge, b.edge), std::max(a.edge, b.edge)}) > 0;
                if (bidir != is_racy)
                  r.failures.push_back(make_line_pair(a.global, a.line, b.line).str() + ": racy=" +
                                       (is_racy ? "yes" : "no") + " but compatible=" + (bidir ? "yes" : "no"));
              }
            return r;
          })};
}

/// Each registered mutant must be rejected by the law or soundness suite.
inline SuiteReport run_mutation_suite(const std::vector<PreparedCase>& cases) {
  SuiteReport rep{"mutation", {}};
  for (const auto& m : registered_mutants()) {
    CaseResult r{m.name, 1, {}};
    bool killed = !run_law_suite(cases, {m.impl}).ok() || !run_soundness_suite(cases, m).ok();
    if (!killed) r.failures.push_back("mutant survived the law and soundness suites");
    rep.cases.push_back(std::move(r));
  }
  return rep;
}

struct ConformanceReport {
  std::vector<SuiteReport> suites;
  bool ok() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteReport& s) { return s.ok(); });
  }
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "digestrace-conformance";
    j["version"] = kReportVersion;
    j["ok"] = ok();
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : suites) arr.push_back(s.to_json());
    j["suites"] = arr;
    return j;
  }
  std::string to_text() const {
    std::ostringstream os;
    for (const auto& s : suites) {
      std::size_t checks = 0;
      for (const auto& c : s.cases) checks += c.checks;
      os << (s.ok() ? "PASS " : "FAIL ") << s.suite << " (" << s.cases.size() << " cases, " << checks << " checks)\n";
      for (const auto& c : s.cases)
        for (const auto& f : c.failures) os << "  " << c.name << ": " << f << '\n';
    }
    return os.str();
  }
};

inline ConformanceReport run_conformance(const std::vector<CorpusCase>& corpus) {
  auto cases = prepare_all(corpus);
  ConformanceReport rep;
  rep.suites.push_back(run_oracle_suite(cases));
  rep.suites.push_back(run_soundness_suite(cases));
  rep.suites.push_back(run_law_suite(cases, shipped_digests()));
  rep.suites.push_back(run_equivalence_suite(cases));
  rep.suites.push_back(run_mutation_suite(cases));
  return rep;
}

}  // namespace digestrace
