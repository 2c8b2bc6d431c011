#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "seamstress/text.hpp"

namespace fs = std::filesystem;

inline fs::path fixture_path(const std::string& rel) { return fs::path(SEAMSTRESS_FIXTURES) / rel; }

inline std::string read_fixture(const std::string& rel) {
  return seamstress::read_file(fixture_path(rel));
}

/// Regular files under fixtures/<rel> with one of the given extensions, sorted.
inline std::vector<std::string> fixture_files(const std::string& rel,
                                              const std::vector<std::string>& exts) {
  std::vector<std::string> out;
  for (auto& e : fs::recursive_directory_iterator(fixture_path(rel))) {
    if (!e.is_regular_file()) continue;
    for (auto& x : exts)
      if (e.path().extension() == x) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("seamstress-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

  void write(const std::string& rel, const std::string& content) const {
    seamstress::write_file_atomic(path_ / rel, content);
  }

 private:
  fs::path path_;
};
