#include "mavgram/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mavgram {

const char* split_name(SplitTag s) {
  switch (s) {
    case SplitTag::train: return "train";
    case SplitTag::finetune: return "finetune";
    case SplitTag::test: return "test";
  }
  throw std::invalid_argument("unknown split tag");
}

SplitTag split_from_string(const std::string& s) {
  if (s == "train") return SplitTag::train;
  if (s == "finetune") return SplitTag::finetune;
  if (s == "test") return SplitTag::test;
  throw std::invalid_argument("unknown split: " + s);
}

namespace {

[[noreturn]] void fail_line(const std::string& path, size_t line, const std::string& why) {
  throw std::runtime_error(path + ": " + why + " at line " + std::to_string(line));
}

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  if (q.is_absolute()) return q.lexically_normal().string();
  return (base / q).lexically_normal().string();
}

}  // namespace

std::vector<SampleRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  const fs::path base = fs::path(path).parent_path();

  std::vector<SampleRecord> out;
  std::set<std::string> ids;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(path, lineno, std::string("malformed record (") + e.what() + ")");
    }
    SampleRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      r.acoustic_path = j.at("acoustic_path").get<std::string>();
      r.vibration_path = j.at("vibration_path").get<std::string>();
      r.acoustic_rate = j.at("acoustic_rate").get<double>();
      r.vibration_rate = j.at("vibration_rate").get<double>();
      r.label = j.at("label").get<int>();
      r.split = split_from_string(j.at("split").get<std::string>());
    } catch (const json::exception& e) {
      fail_line(path, lineno, std::string("missing or mistyped field (") + e.what() + ")");
    } catch (const std::invalid_argument& e) {
      fail_line(path, lineno, e.what());
    }
    if (r.label < 0 || r.label > 4) fail_line(path, lineno, "label out of range");
    if (!(r.acoustic_rate > 0.0) || !(r.vibration_rate > 0.0))
      fail_line(path, lineno, "non-positive rate");
    if (!ids.insert(r.id).second) fail_line(path, lineno, "duplicate id '" + r.id + "'");
    r.acoustic_path = resolve(base, r.acoustic_path);
    r.vibration_path = resolve(base, r.vibration_path);
    if (!fs::exists(r.acoustic_path))
      fail_line(path, lineno, "acoustic file not found: " + r.acoustic_path);
    if (!fs::exists(r.vibration_path))
      fail_line(path, lineno, "vibration file not found: " + r.vibration_path);
    out.push_back(std::move(r));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<SampleRecord>& records) {
  const fs::path base = fs::absolute(fs::path(path)).parent_path();
  std::string body;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["acoustic_path"] =
        fs::absolute(r.acoustic_path).lexically_proximate(base).generic_string();
    j["vibration_path"] =
        fs::absolute(r.vibration_path).lexically_proximate(base).generic_string();
    j["acoustic_rate"] = r.acoustic_rate;
    j["vibration_rate"] = r.vibration_rate;
    j["label"] = r.label;
    j["split"] = split_name(r.split);
    body += j.dump();
    body += '\n';
  }
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(tmp.string() + ": cannot open for writing");
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw std::runtime_error(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

}  // namespace mavgram
