#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "routerlab/corpus.hpp"

namespace testing {

inline routerlab::PreferenceRecord rec(const std::string& id, const std::string& text,
                                       routerlab::Outcome o, std::optional<int> label = std::nullopt) {
  return routerlab::make_record(routerlab::make_query(id, text, label), "strong", "weak", o);
}

// The standard experiment split: 800 synthetic records cut 500/100/200.
inline routerlab::DatasetSplit standard_split(std::uint64_t seed) {
  return routerlab::split(routerlab::generate_synthetic(800, seed), {0.625, 0.125, 0.25}, seed);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("routerlab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
