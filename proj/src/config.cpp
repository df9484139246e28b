#include "mavgram/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mavgram/rng.hpp"

namespace mavgram {

int64_t FeatureProfile::samples() const {
  return std::llround(rate * duration);
}

int FeatureProfile::frames() const { return stft_frames(samples(), stft); }

void FeatureProfile::validate() const {
  if (!(rate > 0.0) || !(duration > 0.0))
    throw std::invalid_argument("features: non-positive rate/duration");
  if (stft.n_fft <= 0 || stft.win_length <= 0 || stft.hop <= 0 ||
      stft.win_length > stft.n_fft)
    throw std::invalid_argument("features: bad STFT geometry");
  if (mel.mels < 2) throw std::invalid_argument("features: need at least 2 mel bins");
  if (!(mel.fmin >= 0.0) || !(mel.fmax > mel.fmin) || mel.fmax > rate / 2.0 + 1e-9)
    throw std::invalid_argument("features: bad mel frequency range");
  tgram.validate();
  if (tgram.out_channels != mel.mels)
    throw std::invalid_argument("features: tgram channels must equal mel bins");
  if (tgram.frames_for(samples()) != frames())
    throw std::invalid_argument("features: tgram frame count must match STFT frames");
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch < 1) throw std::invalid_argument("config: bad epochs/batch");
  if (!(base_lr > 0.0) || min_lr < 0.0 || min_lr > base_lr)
    throw std::invalid_argument("config: bad learning rates");
  if (speed_n < 1 || speed_n % 2 == 0)
    throw std::invalid_argument("config: speed_n must be odd and positive");
  if (!(speed_s > 0.0) || (speed_n - 1) / 2 * speed_s >= 1.0)
    throw std::invalid_argument("config: speed_s out of range");
  if (!(arc_margin >= 0.0 && arc_margin < M_PI) || !(arc_scale > 0.0))
    throw std::invalid_argument("config: bad ArcFace parameters");
  features.validate();
  resolved_mfn().validate();
}

MfnSpec TrainConfig::resolved_mfn() const {
  MfnSpec spec = mfn;
  spec.in_channels = static_cast<int>(variant_tags(variant).size());
  spec.input_mels = features.mel.mels;
  spec.input_frames = features.frames();
  return spec;
}

TrainConfig canonical_config() {
  TrainConfig c;
  c.preset = "canonical";
  // defaults in the struct definitions are already the canonical scale
  c.features.mel.fmax = 24000.0;
  c.mfn = MfnSpec::canonical(3);
  return c;
}

TrainConfig desk_config() {
  TrainConfig c;
  c.preset = "desk";
  c.epochs = 20;
  c.features.rate = 16000.0;
  c.features.duration = 1.0;
  c.features.stft.n_fft = 512;
  c.features.stft.win_length = 512;
  c.features.stft.hop = 256;
  c.features.mel.mels = 32;
  c.features.mel.fmax = 8000.0;
  c.features.tgram.in_kernel = 512;
  c.features.tgram.in_stride = 256;
  c.features.tgram.in_pad = 256;
  c.features.tgram.out_channels = 32;
  c.mfn = MfnSpec::desk(3);
  return c;
}

TrainConfig config_from_preset(const std::string& preset) {
  if (preset == "canonical") return canonical_config();
  if (preset == "desk") return desk_config();
  throw std::invalid_argument("unknown preset '" + preset +
                              "' (valid presets: canonical, desk)");
}

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("config: " + key + " must be an integer");
  return static_cast<int>(x);
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad unsigned value for " + key + ": '" + v + "'");
  }
}

std::vector<MfnStage> parse_stages(const std::string& v) {
  std::vector<MfnStage> stages;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    MfnStage st;
    if (std::sscanf(item.c_str(), "%d:%d:%d:%d", &st.expansion, &st.channels,
                    &st.repeat, &st.stride) != 4)
      throw std::invalid_argument(
          "config: mfn.stages entries must be expansion:channels:repeat:stride");
    stages.push_back(st);
  }
  if (stages.empty()) throw std::invalid_argument("config: mfn.stages is empty");
  return stages;
}

std::string stages_to_string(const std::vector<MfnStage>& stages) {
  std::string out;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(stages[i].expansion) + ':' +
           std::to_string(stages[i].channels) + ':' +
           std::to_string(stages[i].repeat) + ':' + std::to_string(stages[i].stride);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void apply_config_kv(TrainConfig& cfg, const std::string& dotted_key,
                     const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos)
    throw std::invalid_argument("config: keys take the form section.key, got '" +
                                dotted_key + "'");
  const std::string sec = dotted_key.substr(0, dot);
  const std::string key = dotted_key.substr(dot + 1);
  const std::string v = trim(value);

  if (sec == "train") {
    if (key == "preset") { cfg.preset = v; return; }  // base selection; see parse
    if (key == "variant") { cfg.variant = variant_from_string(v); return; }
    if (key == "epochs") { cfg.epochs = parse_int(dotted_key, v); return; }
    if (key == "batch") { cfg.batch = parse_int(dotted_key, v); return; }
    if (key == "base_lr") { cfg.base_lr = parse_double(dotted_key, v); return; }
    if (key == "min_lr") { cfg.min_lr = parse_double(dotted_key, v); return; }
    if (key == "speed_n") { cfg.speed_n = parse_int(dotted_key, v); return; }
    if (key == "speed_s") { cfg.speed_s = parse_double(dotted_key, v); return; }
    if (key == "arc_margin") { cfg.arc_margin = parse_double(dotted_key, v); return; }
    if (key == "arc_scale") { cfg.arc_scale = parse_double(dotted_key, v); return; }
    if (key == "seed") { cfg.seed = parse_u64(dotted_key, v); return; }
  } else if (sec == "features") {
    if (key == "rate") { cfg.features.rate = parse_double(dotted_key, v); return; }
    if (key == "duration") { cfg.features.duration = parse_double(dotted_key, v); return; }
    if (key == "n_fft") { cfg.features.stft.n_fft = parse_int(dotted_key, v); return; }
    if (key == "win_length") { cfg.features.stft.win_length = parse_int(dotted_key, v); return; }
    if (key == "hop") { cfg.features.stft.hop = parse_int(dotted_key, v); return; }
    if (key == "mels") {
      cfg.features.mel.mels = parse_int(dotted_key, v);
      cfg.features.tgram.out_channels = cfg.features.mel.mels;
      return;
    }
    if (key == "fmin") { cfg.features.mel.fmin = parse_double(dotted_key, v); return; }
    if (key == "fmax") { cfg.features.mel.fmax = parse_double(dotted_key, v); return; }
    if (key == "tgram_kernel") { cfg.features.tgram.in_kernel = parse_int(dotted_key, v); return; }
    if (key == "tgram_stride") { cfg.features.tgram.in_stride = parse_int(dotted_key, v); return; }
    if (key == "tgram_pad") { cfg.features.tgram.in_pad = parse_int(dotted_key, v); return; }
    if (key == "tgram_blocks") { cfg.features.tgram.block_count = parse_int(dotted_key, v); return; }
    if (key == "tgram_block_kernel") { cfg.features.tgram.block_kernel = parse_int(dotted_key, v); return; }
    if (key == "tgram_leaky_slope") {
      cfg.features.tgram.leaky_slope = static_cast<float>(parse_double(dotted_key, v));
      return;
    }
  } else if (sec == "mfn") {
    if (key == "stem_channels") { cfg.mfn.stem_channels = parse_int(dotted_key, v); return; }
    if (key == "head_channels") { cfg.mfn.head_channels = parse_int(dotted_key, v); return; }
    if (key == "embed_dim") { cfg.mfn.embed_dim = parse_int(dotted_key, v); return; }
    if (key == "stages") { cfg.mfn.stages = parse_stages(v); return; }
  }
  throw std::invalid_argument("config: unknown key '" + dotted_key + "'");
}

TrainConfig parse_config_text(const std::string& text, const TrainConfig& base) {
  // first pass: preset selection
  std::vector<std::pair<std::string, std::string>> kvs;
  std::string section;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  std::string preset;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config: key outside any section at line " +
                                  std::to_string(lineno));
    const std::string dotted = section + "." + key;
    if (dotted == "train.preset")
      preset = val;
    else
      kvs.emplace_back(dotted, val);
  }
  TrainConfig cfg = preset.empty() ? base : config_from_preset(preset);
  for (const auto& [k, v] : kvs) apply_config_kv(cfg, k, v);
  return cfg;
}

TrainConfig load_config_file(const std::string& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), base);
}

std::string serialize_config(const TrainConfig& cfg) {
  std::string out;
  out += "[train]\n";
  out += "preset = " + cfg.preset + "\n";
  out += "variant = " + std::string(to_string(cfg.variant)) + "\n";
  out += "epochs = " + std::to_string(cfg.epochs) + "\n";
  out += "batch = " + std::to_string(cfg.batch) + "\n";
  out += "base_lr = " + fmt(cfg.base_lr) + "\n";
  out += "min_lr = " + fmt(cfg.min_lr) + "\n";
  out += "speed_n = " + std::to_string(cfg.speed_n) + "\n";
  out += "speed_s = " + fmt(cfg.speed_s) + "\n";
  out += "arc_margin = " + fmt(cfg.arc_margin) + "\n";
  out += "arc_scale = " + fmt(cfg.arc_scale) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "\n[features]\n";
  out += "rate = " + fmt(cfg.features.rate) + "\n";
  out += "duration = " + fmt(cfg.features.duration) + "\n";
  out += "n_fft = " + std::to_string(cfg.features.stft.n_fft) + "\n";
  out += "win_length = " + std::to_string(cfg.features.stft.win_length) + "\n";
  out += "hop = " + std::to_string(cfg.features.stft.hop) + "\n";
  out += "mels = " + std::to_string(cfg.features.mel.mels) + "\n";
  out += "fmin = " + fmt(cfg.features.mel.fmin) + "\n";
  out += "fmax = " + fmt(cfg.features.mel.fmax) + "\n";
  out += "tgram_kernel = " + std::to_string(cfg.features.tgram.in_kernel) + "\n";
  out += "tgram_stride = " + std::to_string(cfg.features.tgram.in_stride) + "\n";
  out += "tgram_pad = " + std::to_string(cfg.features.tgram.in_pad) + "\n";
  out += "tgram_blocks = " + std::to_string(cfg.features.tgram.block_count) + "\n";
  out += "tgram_block_kernel = " + std::to_string(cfg.features.tgram.block_kernel) + "\n";
  out += "tgram_leaky_slope = " + fmt(cfg.features.tgram.leaky_slope) + "\n";
  out += "\n[mfn]\n";
  out += "stem_channels = " + std::to_string(cfg.mfn.stem_channels) + "\n";
  out += "stages = " + stages_to_string(cfg.mfn.stages) + "\n";
  out += "head_channels = " + std::to_string(cfg.mfn.head_channels) + "\n";
  out += "embed_dim = " + std::to_string(cfg.mfn.embed_dim) + "\n";
  return out;
}

uint64_t config_hash(const TrainConfig& cfg) {
  std::string s;
  s += "variant=" + std::string(to_string(cfg.variant));
  s += ";speed_n=" + std::to_string(cfg.speed_n);
  s += ";rate=" + fmt(cfg.features.rate);
  s += ";duration=" + fmt(cfg.features.duration);
  s += ";n_fft=" + std::to_string(cfg.features.stft.n_fft);
  s += ";win=" + std::to_string(cfg.features.stft.win_length);
  s += ";hop=" + std::to_string(cfg.features.stft.hop);
  s += ";mels=" + std::to_string(cfg.features.mel.mels);
  s += ";fmin=" + fmt(cfg.features.mel.fmin);
  s += ";fmax=" + fmt(cfg.features.mel.fmax);
  s += ";tk=" + std::to_string(cfg.features.tgram.in_kernel);
  s += ";ts=" + std::to_string(cfg.features.tgram.in_stride);
  s += ";tp=" + std::to_string(cfg.features.tgram.in_pad);
  s += ";tb=" + std::to_string(cfg.features.tgram.block_count);
  s += ";tbk=" + std::to_string(cfg.features.tgram.block_kernel);
  s += ";stem=" + std::to_string(cfg.mfn.stem_channels);
  s += ";stages=" + stages_to_string(cfg.mfn.stages);
  s += ";head=" + std::to_string(cfg.mfn.head_channels);
  s += ";embed=" + std::to_string(cfg.mfn.embed_dim);
  return fnv1a64(s);
}

}  // namespace mavgram
