#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

inline std::string corpus_dir() { return DIGESTRACE_CORPUS; }

inline std::string corpus_source(const std::string& name) {
  std::ifstream in(std::filesystem::path(corpus_dir()) / name / "program.rlp");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
