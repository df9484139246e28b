#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "mavgram/rng.hpp"
#include "mavgram/waveform.hpp"

namespace support {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mavgram_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

inline mavgram::Waveform tone(double freq, double rate, double seconds,
                              float amp = 1.0f) {
  mavgram::Waveform w;
  w.rate = rate;
  const auto n = static_cast<size_t>(std::llround(rate * seconds));
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    w.samples[i] =
        amp * static_cast<float>(std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate));
  return w;
}

inline mavgram::Waveform noise(uint64_t seed, size_t n, double rate) {
  mavgram::Rng rng(seed);
  mavgram::Waveform w;
  w.rate = rate;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  return w;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace support
