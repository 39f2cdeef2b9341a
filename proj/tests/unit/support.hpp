#pragma once

#include <filesystem>
#include <string>
#include <unistd.h>

#include "cgnn/graph.hpp"

namespace cgnn::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag)
      : path_(std::filesystem::temp_directory_path() /
              ("cgnn_" + tag + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// 0-1, 0-2, 1-2, 2-3, 3-4, 5 isolated
inline Network small_network() {
  return Network(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}});
}

inline Matrix small_features() {
  Matrix x(6, 3);
  x << 0.5, -1.0, 2.0,
       1.5, 0.3, -0.7,
       -0.2, 0.8, 0.1,
       2.2, -0.4, 0.9,
       0.0, 1.1, -1.3,
       0.7, 0.7, 0.7;
  return x;
}

}  // namespace cgnn::testing
