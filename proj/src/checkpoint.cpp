#include "mavgram/checkpoint.hpp"

#include <algorithm>
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

void put_f32(std::string& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

void put_tensor(std::string& out, const TensorRecord& t) {
  put_str(out, t.name);
  out.push_back(static_cast<char>(t.group));
  out.push_back(static_cast<char>(t.trainable));
  out.push_back(static_cast<char>(t.shape.size()));
  for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
  for (float f : t.values) put_f32(out, f);
}

class Reader {
 public:
  Reader(const std::string& path, std::string data)
      : path_(path), data_(std::move(data)) {}

  uint8_t u8() {
    need(1, "byte");
    return static_cast<uint8_t>(data_[pos_++]);
  }
  uint32_t u32() {
    need(4, "u32");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    const uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::string str() {
    const uint32_t n = u32();
    need(n, "string body");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(size_t n, const char* what) {
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

  TensorRecord tensor() {
    TensorRecord t;
    t.name = str();
    t.group = u8();
    t.trainable = u8();
    const uint8_t rank = u8();
    int64_t count = 1;
    for (uint8_t i = 0; i < rank; ++i) {
      const auto d = static_cast<int>(u32());
      if (d <= 0) fail("non-positive dimension in tensor " + t.name);
      t.shape.push_back(d);
      count *= d;
    }
    if (count > static_cast<int64_t>(remaining() / 4))
      fail("truncated tensor data for " + t.name);
    t.values.resize(static_cast<size_t>(count));
    for (auto& v : t.values) v = f32();
    return t;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error(path_ + ": corrupt checkpoint (" + why + ")");
  }

 private:
  void need(size_t n, const char* what) {
    if (pos_ + n > data_.size())
      fail(std::string("truncated while reading ") + what);
  }
  std::string path_;
  std::string data_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out += "MAVG";
  out.push_back(static_cast<char>(kCheckpointVersion));
  put_u32(out, static_cast<uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) put_tensor(out, t);
  out.push_back(ckpt.opt_state.empty() ? '\0' : '\1');
  if (!ckpt.opt_state.empty()) {
    put_u32(out, static_cast<uint32_t>(ckpt.opt_state.size()));
    for (const auto& t : ckpt.opt_state) put_tensor(out, t);
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

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open checkpoint");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  Reader r(path, std::move(data));
  if (r.raw(4, "magic") != "MAVG") r.fail("bad magic");
  const uint8_t version = r.u8();
  if (version != kCheckpointVersion)
    r.fail("unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  const uint32_t nmeta = r.u32();
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.str();
    ckpt.metadata[k] = r.str();
  }
  const uint32_t ntens = r.u32();
  for (uint32_t i = 0; i < ntens; ++i) ckpt.tensors.push_back(r.tensor());
  const uint8_t has_opt = r.u8();
  if (has_opt == 1) {
    const uint32_t nopt = r.u32();
    for (uint32_t i = 0; i < nopt; ++i) ckpt.opt_state.push_back(r.tensor());
  } else if (has_opt != 0) {
    r.fail("bad optimizer-state flag");
  }
  if (!r.done()) r.fail("trailing bytes");
  return ckpt;
}

Checkpoint checkpoint_from_params(const ParamStore& params,
                                  std::map<std::string, std::string> metadata) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(metadata);
  for (const auto& e : params.entries()) {
    TensorRecord t;
    t.name = e.name;
    t.group = static_cast<uint8_t>(e.group);
    t.trainable = e.tensor->requires_grad ? 1 : 0;
    t.shape = e.tensor->shape;
    t.values = e.tensor->v;
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void params_from_checkpoint(const Checkpoint& ckpt, ParamStore& params) {
  if (ckpt.tensors.size() != params.size())
    throw std::runtime_error("checkpoint: tensor count mismatch");
  for (const auto& t : ckpt.tensors) {
    if (!params.has(t.name))
      throw std::runtime_error("checkpoint: unexpected tensor " + t.name);
    auto dst = params.get(t.name);
    if (dst->shape != t.shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + t.name);
    if (static_cast<uint8_t>(params.group_of(t.name)) != t.group)
      throw std::runtime_error("checkpoint: group mismatch for " + t.name);
    dst->v = t.values;
    dst->requires_grad = t.trainable != 0;
    if (dst->requires_grad) dst->ensure_grad();
  }
}

void copy_matching_values(const Checkpoint& ckpt, ParamStore& params,
                          const std::vector<std::string>& skip) {
  for (const auto& t : ckpt.tensors) {
    if (std::find(skip.begin(), skip.end(), t.name) != skip.end()) continue;
    if (!params.has(t.name)) continue;
    auto dst = params.get(t.name);
    if (dst->shape != t.shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + t.name);
    dst->v = t.values;
  }
}

}  // namespace mavgram
