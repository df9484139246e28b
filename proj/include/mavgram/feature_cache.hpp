#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mavgram {

// Flat feature dump: magic "MAVF", version byte, u32 record count, then per
// record a length-prefixed name, rank byte, u32 dims, and little-endian f32
// data.
struct FeatureRecord {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

inline constexpr uint8_t kFeatureCacheVersion = 1;

void write_feature_cache(const std::string& path,
                         const std::vector<FeatureRecord>& records);  // atomic
std::vector<FeatureRecord> read_feature_cache(const std::string& path);

}  // namespace mavgram
