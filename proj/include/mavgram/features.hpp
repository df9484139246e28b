#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mavgram/waveform.hpp"

namespace mavgram {

enum class WindowKind { hann, rect };

struct StftConfig {
  int n_fft = 1024;  // power of two
  int win_length = 1024;
  int hop = 512;
  WindowKind window = WindowKind::hann;
  bool center_pad = true;  // reflect padding by n_fft/2
};

struct MelConfig {
  int mels = 64;
  double fmin = 0.0;
  double fmax = 24000.0;  // defaults pair with 48 kHz input
  float log_floor = 1e-10f;
};

// Dense row-major matrix of floats.
struct Grid {
  int rows = 0, cols = 0;
  std::vector<float> v;
  float& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

// channels x mels x frames stack with channel tags from {M, A, V}.
struct FeatureMap {
  int channels = 0, mels = 0, frames = 0;
  std::vector<float> data;  // [c][m][t]
  std::vector<std::string> channel_tags;
  float& at(int c, int m, int t) {
    return data[(static_cast<size_t>(c) * mels + m) * frames + t];
  }
  float at(int c, int m, int t) const {
    return data[(static_cast<size_t>(c) * mels + m) * frames + t];
  }
};

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false);

// Number of frames the STFT produces for an input of `len` samples.
int stft_frames(size_t len, const StftConfig& cfg);

// Power spectrogram |STFT|^2, (n_fft/2 + 1) x frames.
Grid stft_power(const Waveform& x, const StftConfig& cfg);

// Triangular mel filter bank, mels x (n_fft/2 + 1). HTK mel scale, rows
// peak-normalized to 1.
Grid mel_weights(const MelConfig& mel, int n_fft, double sample_rate);

// Single-channel log-mel feature: log(max(w * power, log_floor)), tag "M".
FeatureMap log_mel(const Waveform& x, const StftConfig& stft, const MelConfig& mel);

enum class Variant { MAV, ST, MV, AV };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);
// channel tags in concatenation order, e.g. MAV -> {M, A, V}
std::vector<std::string> variant_tags(Variant v);
bool variant_uses(Variant v, const std::string& tag);

// Channel concatenation of the maps the variant needs (shapes must match).
FeatureMap assemble(Variant v, const FeatureMap& mgram, const FeatureMap& agram,
                    const FeatureMap& vgram);

}  // namespace mavgram
