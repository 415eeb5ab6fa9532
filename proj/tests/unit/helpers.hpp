#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rarecorpus/corpus.hpp"

namespace testutil {

inline rarecorpus::Document doc(std::string id, std::string text, std::optional<rarecorpus::Label> label = {}) {
  rarecorpus::Document d;
  d.doc_id = std::move(id);
  d.text = std::move(text);
  d.gold_label = label;
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("rarecorpus-" + name + "-" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
