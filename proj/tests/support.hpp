#pragma once

#include "glyco/types.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace glyco::test {

// Scratch directory removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("glyco_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline CgmSeries make_cgm(const std::string& id, std::vector<std::pair<Timestamp, double>> pts,
                          std::int64_t spacing = 300) {
  CgmSeries s;
  s.patient_id = id;
  s.nominal_spacing = spacing;
  for (auto [t, g] : pts) s.samples.push_back({t, g});
  return s;
}

inline ActivitySeries make_activity(const std::string& id,
                                    std::vector<std::pair<Timestamp, ActivitySample>> pts,
                                    std::int64_t epoch = 30) {
  ActivitySeries s;
  s.patient_id = id;
  s.epoch_length = epoch;
  for (auto& [t, a] : pts) s.samples.push_back({t, a});
  return s;
}

inline ActivitySample activity_of(double dx, double dy = 0, double dz = 0, double steps = 0,
                                  double i_sit = 0, double i_std = 0, double i_lie = 0,
                                  double i_off = 0) {
  return {dx, dy, dz, steps, i_sit, i_std, i_lie, i_off};
}

} // namespace glyco::test
