#pragma once

#include <algorithm>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "digestrace/digests/join.hpp"
#include "digestrace/digests/lockset.hpp"
#include "digestrace/digests/once.hpp"
#include "digestrace/digests/threadflag.hpp"
#include "digestrace/digests/tid.hpp"

namespace digestrace {

/// Registry names in canonical order.
inline const std::vector<std::string>& digest_names() {
  static const std::vector<std::string> names = {"lockset", "threadflag", "tid", "join", "once"};
  return names;
}

inline DigestPtr make_digest(std::string_view name) {
  if (name == "lockset") return std::make_shared<LocksetDigest>();
  if (name == "threadflag") return std::make_shared<ThreadFlagDigest>();
  if (name == "tid") return std::make_shared<TidDigest>();
  if (name == "join") return std::make_shared<JoinDigest>();
  if (name == "once") return std::make_shared<OnceDigest>();
  throw ConfigError("unknown digest '" + std::string(name) + "'");
}

/// Splits "lockset,tid" into names, rejecting duplicates and unknown names.
inline std::vector<std::string> parse_digest_list(std::string_view list) {
  std::vector<std::string> out;
  std::stringstream ss{std::string(list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (std::find(digest_names().begin(), digest_names().end(), item) == digest_names().end())
      throw ConfigError("unknown digest '" + item + "'");
    if (std::find(out.begin(), out.end(), item) != out.end()) throw ConfigError("digest '" + item + "' given twice");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("no digests selected");
  return out;
}

/// Product of the named digests in canonical order. The join digest builds
/// on thread ids and is only accepted together with tid.
inline std::shared_ptr<ProductDigest> make_product(std::vector<std::string> names) {
  std::vector<std::string> sorted;
  for (const auto& n : digest_names())
    if (std::find(names.begin(), names.end(), n) != names.end()) sorted.push_back(n);
  for (const auto& n : names)
    if (std::find(digest_names().begin(), digest_names().end(), n) == digest_names().end())
      throw ConfigError("unknown digest '" + n + "'");
  auto has = [&](const char* n) { return std::find(sorted.begin(), sorted.end(), n) != sorted.end(); };
  if (has("join") && !has("tid")) throw ConfigError("the join digest requires the tid digest");
  std::vector<DigestPtr> comps;
  for (const auto& n : sorted) comps.push_back(make_digest(n));
  return std::make_shared<ProductDigest>(std::move(comps));
}

inline std::shared_ptr<ProductDigest> make_product(std::string_view list) {
  return make_product(parse_digest_list(list));
}

}  // namespace digestrace
