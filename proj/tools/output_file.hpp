#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "rarecorpus/error.hpp"

namespace rarecorpus::cli {

/// Writes to "<path>.partial" and renames onto the target on commit(), so a
/// failed run never leaves a complete-looking file behind.
class OutputFile {
 public:
  explicit OutputFile(std::filesystem::path path) : path_(std::move(path)), partial_(path_.string() + ".partial") {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(partial_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open " + partial_.string() + " for writing");
  }

  std::ostream& stream() { return out_; }
  const std::filesystem::path& path() const { return path_; }

  void commit() {
    out_.flush();
    if (!out_) throw Error("write failed for " + partial_.string());
    out_.close();
    std::filesystem::rename(partial_, path_);
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path partial_;
  std::ofstream out_;
};

}  // namespace rarecorpus::cli
