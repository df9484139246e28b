#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mavgram/manifest.hpp"
#include "mavgram/rng.hpp"
#include "mavgram/waveform.hpp"

namespace mavgram {

// Synthetic paired acoustic/vibration bearing dataset. Faulty classes emit an
// impulse train at the class's characteristic frequency exciting a decaying
// resonance; the acoustic channel is the same train passed through a random
// FIR path plus mains hum; both channels carry Gaussian noise at snr_db.
struct SynthProfile {
  std::string name = "source";
  double shaft_hz = 30.0;      // f_r
  double res_hz = 4000.0;      // ring-down resonance
  double decay = 800.0;        // exponential decay, 1/s
  double impulse_amp = 1.0;
  double amp_jitter = 0.2;     // per-impulse uniform amplitude jitter
  double snr_db = 10.0;
  int fir_taps = 64;
  double hum_hz = 50.0;
  double acoustic_rate = 48000.0;
  double vibration_rate = 5120.0;
  double duration = 4.0;       // seconds

  void validate() const;
};

SynthProfile source_profile();
SynthProfile target_profile();
SynthProfile profile_by_name(const std::string& name);  // "source" | "target"

// Characteristic-frequency multiplier (x shaft rate) for fault labels:
// 1 outer race (BPFO) 3.6, 2 inner race (BPFI) 5.4, 3 ball (BSF) 2.4,
// 4 cage (FTF) 0.4. Label 0 (healthy) has none and is rejected.
double characteristic_multiplier(int label);

struct SynthSample {
  Waveform acoustic;
  Waveform vibration;
};

// One sample; `fir` is the shared acoustic-path impulse response.
SynthSample synth_sample(const SynthProfile& profile, int label,
                         const std::vector<double>& fir, const Rng& rng);

// Draws a random acoustic path from `rng`; synth_dataset draws one per
// recording.
std::vector<double> synth_fir(const SynthProfile& profile, const Rng& rng);

// Generates per_class samples for labels 0..classes-1, writes audio/ WAVs and
// vib/ texts plus manifest.jsonl under out_dir, and returns the records.
std::vector<SampleRecord> synth_dataset(const SynthProfile& profile, int classes,
                                        int per_class, uint64_t seed,
                                        const std::string& out_dir);

}  // namespace mavgram
