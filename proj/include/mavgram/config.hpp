#pragma once

#include <cstdint>
#include <string>

#include "mavgram/features.hpp"
#include "mavgram/mfn.hpp"
#include "mavgram/tgram.hpp"

namespace mavgram {

// Everything needed to turn a raw sample pair into a fused feature map.
struct FeatureProfile {
  double rate = 48000.0;
  double duration = 4.0;
  StftConfig stft;
  MelConfig mel;
  TgramConfig tgram;

  int64_t samples() const;
  int frames() const;  // STFT frame count for the canonical length
  void validate() const;  // also checks tgram frames match STFT frames
};

struct TrainConfig {
  std::string preset = "canonical";
  Variant variant = Variant::MAV;
  int epochs = 200;
  int batch = 32;
  double base_lr = 0.0005;
  double min_lr = 0.0;
  int speed_n = 3;
  double speed_s = 0.1;
  double arc_margin = 0.7;
  double arc_scale = 30.0;
  uint64_t seed = 1;
  FeatureProfile features;
  MfnSpec mfn;  // in_channels / input extent are overridden from variant+features

  void validate() const;
  // MfnSpec with input channels/extent resolved for this config's variant.
  MfnSpec resolved_mfn() const;
};

// Paper-faithful scale: 4 s @ 48 kHz, 64 mels, 376 frames, 200 epochs.
TrainConfig canonical_config();
// Laptop-scale default: 1 s @ 16 kHz, 32 mels, 63 frames, 20 epochs.
TrainConfig desk_config();
TrainConfig config_from_preset(const std::string& preset);

// Applies one "section.key" = value pair; unknown keys are rejected.
void apply_config_kv(TrainConfig& cfg, const std::string& dotted_key,
                     const std::string& value);

// INI-style text: [section] headers, key = value, '#' comments. A
// "train.preset" key (applied first) selects the base the remaining keys
// modify; otherwise `base` is used as-is.
TrainConfig parse_config_text(const std::string& text, const TrainConfig& base);
TrainConfig load_config_file(const std::string& path, const TrainConfig& base);

// Canonical serialization: fixed section/key order, stable float formatting.
std::string serialize_config(const TrainConfig& cfg);

// Hash over the fields that determine feature geometry and network shape
// (variant, speed_n, feature profile, MFN spec). Training-loop scalars,
// seed, and any paths are excluded, so checkpoints stay compatible across
// seeds but conflict across variants or geometries.
uint64_t config_hash(const TrainConfig& cfg);

}  // namespace mavgram
