#include "mavgram/feature_cache.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace mavgram {

namespace {

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error(path + ": corrupt feature cache (" + why + ")");
}

uint32_t get_u32(const std::string& path, const std::string& d, size_t& pos) {
  if (pos + 4 > d.size()) fail(path, "truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<uint8_t>(d[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

void write_feature_cache(const std::string& path,
                         const std::vector<FeatureRecord>& records) {
  std::string out;
  out += "MAVF";
  out.push_back(static_cast<char>(kFeatureCacheVersion));
  put_u32(out, static_cast<uint32_t>(records.size()));
  for (const auto& r : records) {
    put_u32(out, static_cast<uint32_t>(r.name.size()));
    out += r.name;
    out.push_back(static_cast<char>(r.shape.size()));
    int64_t count = 1;
    for (int d : r.shape) {
      put_u32(out, static_cast<uint32_t>(d));
      count *= d;
    }
    if (count != static_cast<int64_t>(r.data.size()))
      throw std::invalid_argument("feature cache: shape/data mismatch for " + r.name);
    for (float f : r.data) {
      uint32_t v;
      std::memcpy(&v, &f, 4);
      put_u32(out, v);
    }
  }
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(tmp.string() + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

std::vector<FeatureRecord> read_feature_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open feature cache");
  std::string d((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  size_t pos = 0;
  if (d.size() < 5 || d.compare(0, 4, "MAVF") != 0) fail(path, "bad magic");
  pos = 4;
  if (static_cast<uint8_t>(d[pos++]) != kFeatureCacheVersion)
    fail(path, "unsupported version");
  const uint32_t count = get_u32(path, d, pos);
  std::vector<FeatureRecord> records;
  for (uint32_t i = 0; i < count; ++i) {
    FeatureRecord r;
    const uint32_t nlen = get_u32(path, d, pos);
    if (pos + nlen > d.size()) fail(path, "truncated name");
    r.name = d.substr(pos, nlen);
    pos += nlen;
    if (pos >= d.size()) fail(path, "truncated rank");
    const auto rank = static_cast<uint8_t>(d[pos++]);
    int64_t n = 1;
    for (uint8_t k = 0; k < rank; ++k) {
      const auto dim = static_cast<int>(get_u32(path, d, pos));
      if (dim <= 0) fail(path, "non-positive dimension");
      r.shape.push_back(dim);
      n *= dim;
    }
    if (pos + 4 * static_cast<size_t>(n) > d.size()) fail(path, "truncated data");
    r.data.resize(static_cast<size_t>(n));
    for (auto& f : r.data) {
      const uint32_t v = get_u32(path, d, pos);
      std::memcpy(&f, &v, 4);
    }
    records.push_back(std::move(r));
  }
  if (pos != d.size()) fail(path, "trailing bytes");
  return records;
}

}  // namespace mavgram
