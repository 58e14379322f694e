#pragma once

// Pairwise race check over the access accumulators, race reports, and the
// ablation driver.

#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "digestrace/digests/registry.hpp"
#include "digestrace/instrument.hpp"
#include "digestrace/parser.hpp"
#include "digestrace/solver.hpp"

namespace digestrace {

inline constexpr int kReportVersion = 1;

struct SiteRef {
  NodeId node = 0;
  EdgeId edge = 0;
  AccessType type = AccessType::R;
  int line = 0;
};

struct FlaggedPair {
  std::string global;
  SiteRef a;  // a.node <= b.node
  SiteRef b;
  std::string digest_a;  // witnessing records
  std::string digest_b;
};

struct RaceReport {
  std::vector<std::string> digests;
  std::vector<PredicateMode> modes;
  std::vector<FlaggedPair> races;  // sorted by (global, a.node, b.node)
  std::size_t records = 0;
  std::size_t candidate_pairs = 0;  // site pairs with at least one write

  bool race_free() const { return races.empty(); }

  std::set<std::tuple<std::string, NodeId, NodeId>> pair_set() const {
    std::set<std::tuple<std::string, NodeId, NodeId>> s;
    for (const auto& r : races) s.emplace(r.global, r.a.node, r.b.node);
    return s;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "digestrace-report";
    j["version"] = kReportVersion;
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < digests.size(); ++i)
      comps.push_back({{"digest", digests[i]}, {"predicate", to_string(modes[i])}});
    j["components"] = comps;
    nlohmann::ordered_json rs = nlohmann::ordered_json::array();
    auto site = [](const SiteRef& s) {
      return nlohmann::ordered_json{{"node", s.node}, {"line", s.line}, {"type", to_string(s.type)}};
    };
    for (const auto& r : races)
      rs.push_back({{"global", r.global},
                    {"a", site(r.a)},
                    {"b", site(r.b)},
                    {"witness", {{"a", r.digest_a}, {"b", r.digest_b}}}});
    j["races"] = rs;
    j["summary"] = {{"records", records}, {"candidate_pairs", candidate_pairs}, {"flagged", races.size()}};
    return j;
  }

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& r : races)
      os << "race on " << r.global << ": line " << r.a.line << " (" << to_string(r.a.type) << ") <-> line "
         << r.b.line << " (" << to_string(r.b.type) << ")\n";
    os << races.size() << " of " << candidate_pairs << " candidate pair(s) flagged";
    os << " [";
    for (std::size_t i = 0; i < digests.size(); ++i)
      os << (i ? ", " : "") << digests[i] << ":" << to_string(modes[i]);
    os << "]\n";
    return os.str();
  }
};

/// Flags every pair of access records (identical ones included) on the same
/// global with at least one write whose product verdict is top.
inline RaceReport detect(const Solution& sol, const ProductDigest& d, const std::vector<PredicateMode>& modes) {
  if (modes.size() != d.arity()) throw ArityMismatch("one predicate mode per component expected");
  RaceReport rep;
  for (const auto& c : d.components()) rep.digests.push_back(c->name());
  rep.modes = modes;
  std::set<std::tuple<std::string, NodeId, NodeId>> candidates;
  std::map<std::tuple<std::string, NodeId, NodeId>, FlaggedPair> flagged;
  for (const auto& [g, recs] : sol.accesses) {
    rep.records += recs.size();
    for (std::size_t i = 0; i < recs.size(); ++i) {
      for (std::size_t j = i; j < recs.size(); ++j) {
        const auto* x = &recs[i];
        const auto* y = &recs[j];
        if (x->type != AccessType::W && y->type != AccessType::W) continue;
        if (y->site < x->site) std::swap(x, y);
        auto key = std::make_tuple(g, x->site, y->site);
        candidates.insert(key);
        if (flagged.count(key)) continue;
        if (d.mhp(g, x->digest, y->digest, modes) == Verdict::False) continue;
        flagged.emplace(key, FlaggedPair{g,
                                         {x->site, x->edge, x->type, x->line},
                                         {y->site, y->edge, y->type, y->line},
                                         x->digest.str(),
                                         y->digest.str()});
      }
    }
  }
  rep.candidate_pairs = candidates.size();
  for (auto& [k, v] : flagged) rep.races.push_back(std::move(v));
  return rep;
}

inline RaceReport detect(const Solution& sol, const ProductDigest& d, PredicateMode mode = PredicateMode::Bespoke) {
  return detect(sol, d, std::vector<PredicateMode>(d.arity(), mode));
}

struct Analysis {
  Program program;  // instrumented
  std::shared_ptr<ProductDigest> digest;
  Solution solution;
  RaceReport report;
};

inline Analysis analyze(const Program& source, const std::vector<std::string>& digests,
                        PredicateMode mode = PredicateMode::Bespoke, SolverOptions opt = {}) {
  Analysis a;
  a.program = source.instrumented ? source : instrument_atomicity(source);
  a.digest = make_product(digests);
  a.solution = solve(a.program, *a.digest, opt);
  a.report = detect(a.solution, *a.digest, mode);
  return a;
}

inline Analysis analyze(std::string_view text, const std::vector<std::string>& digests,
                        PredicateMode mode = PredicateMode::Bespoke, SolverOptions opt = {}) {
  return analyze(parse_program(text), digests, mode, opt);
}

/// One ablation configuration: the full product is solved once and the
/// predicates of the digests outside `enabled` answer top.
struct AblationRow {
  unsigned mask = 0;  // bit i = digest_names()[i] enabled
  std::vector<std::string> enabled;
  std::size_t flagged_bespoke = 0;
  std::size_t flagged_generic = 0;
  std::set<std::tuple<std::string, NodeId, NodeId>> pairs_bespoke;
  std::set<std::tuple<std::string, NodeId, NodeId>> pairs_generic;
};

inline std::string subset_name(const std::vector<std::string>& enabled) {
  if (enabled.empty()) return "(none)";
  std::string s;
  for (const auto& n : enabled) s += (s.empty() ? "" : "+") + n;
  return s;
}

inline std::vector<PredicateMode> ablation_modes(unsigned mask, PredicateMode on) {
  std::vector<PredicateMode> m;
  for (std::size_t i = 0; i < digest_names().size(); ++i)
    m.push_back(mask & (1u << i) ? on : PredicateMode::Disabled);
  return m;
}

inline std::vector<AblationRow> ablate(const Program& source, SolverOptions opt = {}) {
  Program p = source.instrumented ? source : instrument_atomicity(source);
  auto d = make_product(digest_names());
  auto sol = solve(p, *d, opt);
  std::vector<AblationRow> rows;
  const unsigned n = static_cast<unsigned>(digest_names().size());
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    AblationRow r;
    r.mask = mask;
    for (unsigned i = 0; i < n; ++i)
      if (mask & (1u << i)) r.enabled.push_back(digest_names()[i]);
    auto rb = detect(sol, *d, ablation_modes(mask, PredicateMode::Bespoke));
    auto rg = detect(sol, *d, ablation_modes(mask, PredicateMode::Generic));
    r.pairs_bespoke = rb.pair_set();
    r.pairs_generic = rg.pair_set();
    r.flagged_bespoke = r.pairs_bespoke.size();
    r.flagged_generic = r.pairs_generic.size();
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Pairs (S, T) with S a subset of T whose flag count grows from S to T.
inline std::vector<std::pair<unsigned, unsigned>> monotonicity_violations(const std::vector<AblationRow>& rows) {
  std::vector<std::pair<unsigned, unsigned>> out;
  for (const auto& s : rows)
    for (const auto& t : rows)
      if (s.mask != t.mask && (s.mask & t.mask) == s.mask &&
          (t.flagged_bespoke > s.flagged_bespoke || t.flagged_generic > s.flagged_generic))
        out.emplace_back(s.mask, t.mask);
  return out;
}

inline nlohmann::ordered_json ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::ordered_json j;
  j["schema"] = "digestrace-ablation";
  j["version"] = kReportVersion;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows)
    arr.push_back({{"digests", subset_name(r.enabled)},
                   {"flagged_bespoke", r.flagged_bespoke},
                   {"flagged_generic", r.flagged_generic}});
  j["rows"] = arr;
  return j;
}

}  // namespace digestrace
