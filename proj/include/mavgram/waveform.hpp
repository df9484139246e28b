#pragma once

#include <vector>

namespace mavgram {

// Mono sampled signal. Amplitude is dimensionless, rate in Hz.
struct Waveform {
  std::vector<float> samples;
  double rate = 0.0;
};

// Throws std::invalid_argument unless rate > 0, samples non-empty and finite.
void validate(const Waveform& x);

// Affine map of the sample range onto [-1, 1]. A constant signal maps to
// all zeros; `degenerate`, when non-null, is set in that case so callers
// can surface a warning instead of aborting a batch.
Waveform minmax_normalize(const Waveform& x, bool* degenerate = nullptr);

// Band-limited rate conversion (windowed-sinc, Kaiser window, 16 taps per
// side). Output length is round(len * to_rate / rate). to_rate == rate is
// an exact identity.
Waveform resample(const Waveform& x, double to_rate);

// Time-scale the content by 1/factor (a tone at f moves to f*factor) while
// keeping the nominal rate and the original length: resample to rate/factor,
// relabel the rate, then loop-pad or center-crop back to len(x).
Waveform speed_perturb(const Waveform& x, double factor);

// Loop-pad (tile) short signals, center-crop long ones, to exactly `length`.
std::vector<float> fit_length(const std::vector<float>& samples, size_t length);

// Symmetric grid of n speed factors {1 + k*s}, k = -(n-1)/2 .. (n-1)/2.
struct SpeedGrid {
  int n = 1;
  double step = 0.0;
  std::vector<double> factors;  // ascending, always contains 1.0
};

// n must be odd and >= 1, s > 0, and (n-1)/2 * s < 1 so every factor stays
// positive.
SpeedGrid speed_grid(int n, double s);

// Virtual class ids: base * n + speed_index, inverted by integer division.
int virtual_label(int base_label, int speed_index, int n);
int base_from_virtual(int virtual_id, int n);

}  // namespace mavgram
