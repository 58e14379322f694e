// digestrace command line: analyze, oracle, conform, ablate, print.
// Exit status: 0 race-free (or suite passed), 1 races (or suite failed), 2 error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "digestrace/conformance.hpp"
#include "digestrace/detector.hpp"
#include "digestrace/oracle.hpp"
#include "digestrace/printer.hpp"

namespace dr = digestrace;

namespace {

constexpr int kClean = 0;
constexpr int kRaces = 1;
constexpr int kError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_analyze(const std::string& file, const std::string& digests, const std::string& predicate,
                const std::string& format, bool dump) {
  auto mode = dr::parse_predicate_mode(predicate);
  if (mode == dr::PredicateMode::Disabled) throw dr::ConfigError("predicate must be bespoke or generic");
  auto a = dr::analyze(read_file(file), dr::parse_digest_list(digests), mode);
  if (format == "json") {
    auto j = a.report.to_json();
    if (dump) j["solution"] = a.solution.to_json();
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << a.report.to_text();
  }
  return a.report.race_free() ? kClean : kRaces;
}

int cmd_oracle(const std::string& file, std::size_t depth, std::size_t width, const std::string& format) {
  auto p = dr::instrument_atomicity(dr::parse_program(read_file(file)));
  dr::OracleBounds b;
  b.depth = depth;
  b.width = width;
  auto ts = dr::enumerate_traces(p, b);
  auto racy = dr::find_racy_pairs(p, ts);
  if (format == "json") {
    nlohmann::ordered_json j;
    j["schema"] = "digestrace-oracle";
    j["version"] = dr::kReportVersion;
    j["bounds"] = {{"depth", depth}, {"width", width}};
    j["exhaustive"] = !ts.bound_exceeded;
    j["traces"] = ts.traces.size();
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : racy)
      arr.push_back({{"global", r.global}, {"lines", {p.edges[r.a].line, p.edges[r.b].line}}});
    j["racy_pairs"] = arr;
    std::cout << j.dump(2) << '\n';
  } else {
    for (const auto& r : racy)
      std::cout << "race on " << r.global << ": line " << p.edges[r.a].line << " ("
                << dr::to_string(p.edges[r.a].action.access_type()) << ") <-> line " << p.edges[r.b].line << " ("
                << dr::to_string(p.edges[r.b].action.access_type()) << ")\n";
    std::cout << racy.size() << " racy pair(s) over " << ts.traces.size() << " local traces";
    if (ts.bound_exceeded) std::cout << " (bounds exceeded, result is partial)";
    std::cout << '\n';
  }
  return racy.empty() ? kClean : kRaces;
}

int cmd_conform(const std::string& dir, const std::string& format) {
  auto rep = dr::run_conformance(dr::load_corpus(dir));
  if (format == "json")
    std::cout << rep.to_json().dump(2) << '\n';
  else
    std::cout << rep.to_text();
  return rep.ok() ? kClean : kRaces;
}

int cmd_ablate(const std::string& file, const std::string& format) {
  auto rows = dr::ablate(dr::parse_program(read_file(file)));
  auto bad = dr::monotonicity_violations(rows);
  if (format == "json") {
    auto j = dr::ablation_to_json(rows);
    j["monotone"] = bad.empty();
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "digests                             bespoke  generic\n";
    for (const auto& r : rows) {
      auto name = dr::subset_name(r.enabled);
      std::cout << name << std::string(name.size() < 36 ? 36 - name.size() : 1, ' ') << r.flagged_bespoke
                << std::string(9 - std::min<std::size_t>(8, std::to_string(r.flagged_bespoke).size()), ' ')
                << r.flagged_generic << '\n';
    }
    if (!bad.empty()) std::cout << bad.size() << " monotonicity violation(s)\n";
  }
  return rows.back().flagged_bespoke == 0 ? kClean : kRaces;
}

int cmd_print(const std::string& file, bool dot, bool instrumented) {
  auto p = dr::parse_program(read_file(file));
  if (instrumented) p = dr::instrument_atomicity(p);
  std::cout << (dot ? dr::program_to_dot(p) : dr::print_program(p));
  return kClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"digestrace: thread-modular static data race detection"};
  app.require_subcommand(1);

  std::string file, dir, digests = "lockset,threadflag,tid,join,once", predicate = "bespoke", format = "text";
  std::size_t depth = 40, width = 4;
  bool dump = false, dot = false, instrumented = false;

  auto* an = app.add_subcommand("analyze", "report pairs of accesses that may race");
  an->add_option("file", file, "program")->required()->check(CLI::ExistingFile);
  an->add_option("--digests", digests, "comma separated digest list")->capture_default_str();
  an->add_option("--predicate", predicate, "bespoke or generic")->capture_default_str();
  an->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  an->add_flag("--solution", dump, "include the fixpoint in json output");

  auto* orc = app.add_subcommand("oracle", "ground-truth races by bounded enumeration");
  orc->add_option("file", file, "program")->required()->check(CLI::ExistingFile);
  orc->add_option("--depth", depth, "max actions per execution")->capture_default_str();
  orc->add_option("--width", width, "max thread instances")->capture_default_str();
  orc->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* con = app.add_subcommand("conform", "run the conformance suites on a corpus");
  con->add_option("dir", dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  con->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* abl = app.add_subcommand("ablate", "flagged pairs per digest subset");
  abl->add_option("file", file, "program")->required()->check(CLI::ExistingFile);
  abl->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* pr = app.add_subcommand("print", "pretty-print a program");
  pr->add_option("file", file, "program")->required()->check(CLI::ExistingFile);
  pr->add_flag("--dot", dot, "graphviz output");
  pr->add_flag("--instrumented", instrumented, "show the atomicity instrumentation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*an) return cmd_analyze(file, digests, predicate, format, dump);
    if (*orc) return cmd_oracle(file, depth, width, format);
    if (*con) return cmd_conform(dir, format);
    if (*abl) return cmd_ablate(file, format);
    if (*pr) return cmd_print(file, dot, instrumented);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
