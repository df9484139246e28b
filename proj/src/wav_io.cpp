#include "mavgram/wav_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mavgram {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void wr_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error(path + ": " + why);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 12 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    fail(path, "not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const char* tag = reinterpret_cast<const char*>(raw.data() + pos);
    const uint32_t len = rd_u32(raw.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + len > raw.size()) fail(path, "truncated chunk");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (len < 16) fail(path, "fmt chunk too short");
      format = rd_u16(raw.data() + body);
      channels = rd_u16(raw.data() + body + 2);
      rate = rd_u32(raw.data() + body + 4);
      bits = rd_u16(raw.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) fail(path, "missing fmt chunk");
  if (data_off == 0) fail(path, "missing data chunk");
  if (format != 1) fail(path, "unsupported encoding (PCM only)");
  if (channels != 1) fail(path, "unsupported channel count (mono only)");
  if (bits != 16) fail(path, "unsupported sample width (16-bit only)");
  if (rate == 0) fail(path, "zero sample rate");
  if (data_len % 2 != 0) fail(path, "odd data chunk length");

  Waveform w;
  w.rate = rate;
  w.samples.resize(data_len / 2);
  for (size_t i = 0; i < w.samples.size(); ++i) {
    const int16_t s = static_cast<int16_t>(rd_u16(raw.data() + data_off + 2 * i));
    w.samples[i] = static_cast<float>(s) / 32768.0f;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  validate(w);
  const uint32_t rate = static_cast<uint32_t>(std::llround(w.rate));
  const uint32_t data_len = static_cast<uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  wr_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  wr_u32(out, 16);
  wr_u16(out, 1);   // PCM
  wr_u16(out, 1);   // mono
  wr_u32(out, rate);
  wr_u32(out, rate * 2);  // byte rate
  wr_u16(out, 2);          // block align
  wr_u16(out, 16);         // bits
  out += "data";
  wr_u32(out, data_len);
  for (float x : w.samples) {
    long v = std::lround(static_cast<double>(x) * 32768.0);
    v = std::min(32767L, std::max(-32768L, v));
    wr_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(path, "cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(path, "write failed");
}

Waveform read_vibration_text(const std::string& path, double rate) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  Waveform w;
  w.rate = rate;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // tolerate trailing CR and surrounding whitespace
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(a, b - a + 1);
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument("trailing characters");
      w.samples.push_back(static_cast<float>(v));
    } catch (const std::exception&) {
      fail(path, "bad sample at line " + std::to_string(lineno));
    }
  }
  if (w.samples.empty()) fail(path, "no samples");
  return w;
}

void write_vibration_text(const std::string& path, const Waveform& w) {
  validate(w);
  std::ostringstream out;
  char buf[32];
  for (float x : w.samples) {
    std::snprintf(buf, sizeof buf, "%.8g\n", static_cast<double>(x));
    out << buf;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(path, "cannot open for writing");
  const std::string s = out.str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) fail(path, "write failed");
}

}  // namespace mavgram
