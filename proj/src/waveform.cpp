#include "mavgram/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mavgram {

void validate(const Waveform& x) {
  if (!(x.rate > 0.0)) throw std::invalid_argument("waveform: rate must be > 0");
  if (x.samples.empty()) throw std::invalid_argument("waveform: empty");
  for (float s : x.samples)
    if (!std::isfinite(s)) throw std::invalid_argument("waveform: non-finite sample");
}

Waveform minmax_normalize(const Waveform& x, bool* degenerate) {
  validate(x);
  auto [mn_it, mx_it] = std::minmax_element(x.samples.begin(), x.samples.end());
  const double mn = *mn_it, mx = *mx_it;
  Waveform out;
  out.rate = x.rate;
  out.samples.resize(x.samples.size());
  if (degenerate) *degenerate = false;
  if (mx == mn) {
    if (degenerate) *degenerate = true;
    std::fill(out.samples.begin(), out.samples.end(), 0.0f);
    return out;
  }
  const double scale = 2.0 / (mx - mn);
  for (size_t i = 0; i < x.samples.size(); ++i)
    out.samples[i] = static_cast<float>((x.samples[i] - mn) * scale - 1.0);
  return out;
}

namespace {

// zeroth-order modified Bessel function, power series
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 32; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

constexpr int kHalfTaps = 16;
constexpr double kKaiserBeta = 8.0;

// Kaiser-windowed sinc tabulated over t in [0, kHalfTaps]; linear
// interpolation keeps the kernel within ~1e-6 of direct evaluation.
constexpr int kKernelRes = 512;

const std::vector<double>& kernel_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(static_cast<size_t>(kHalfTaps) * kKernelRes + 2, 0.0);
    const double i0_beta = bessel_i0(kKaiserBeta);
    for (size_t i = 0; i + 1 < t.size(); ++i) {
      const double x = static_cast<double>(i) / kKernelRes;
      const double u = x / kHalfTaps;
      if (u >= 1.0) continue;
      t[i] = sinc(x) * bessel_i0(kKaiserBeta * std::sqrt(1.0 - u * u)) / i0_beta;
    }
    return t;
  }();
  return table;
}

}  // namespace

Waveform resample(const Waveform& x, double to_rate) {
  validate(x);
  if (!(to_rate > 0.0)) throw std::invalid_argument("resample: to_rate must be > 0");
  if (to_rate == x.rate) return x;

  const size_t in_len = x.samples.size();
  const double ratio = to_rate / x.rate;
  const auto out_len = static_cast<size_t>(std::max<long long>(
      1, std::llround(static_cast<double>(in_len) * ratio)));

  // When downsampling the kernel cutoff drops to the output Nyquist and the
  // support widens accordingly.
  const double cutoff = std::min(1.0, ratio);
  const double support = kHalfTaps / cutoff;
  const std::vector<double>& kern = kernel_table();

  Waveform out;
  out.rate = to_rate;
  out.samples.resize(out_len);
  for (size_t n = 0; n < out_len; ++n) {
    const double pos = static_cast<double>(n) / ratio;
    const auto k0 = static_cast<long long>(std::ceil(pos - support));
    const auto k1 = static_cast<long long>(std::floor(pos + support));
    double acc = 0.0;
    for (long long k = std::max<long long>(0, k0);
         k <= std::min<long long>(static_cast<long long>(in_len) - 1, k1); ++k) {
      const double t = std::abs((static_cast<double>(k) - pos) * cutoff);
      if (t >= kHalfTaps) continue;
      const double idx = t * kKernelRes;
      const auto cell = static_cast<size_t>(idx);
      const double frac = idx - static_cast<double>(cell);
      const double w = kern[cell] + frac * (kern[cell + 1] - kern[cell]);
      acc += x.samples[static_cast<size_t>(k)] * cutoff * w;
    }
    out.samples[n] = static_cast<float>(acc);
  }
  return out;
}

std::vector<float> fit_length(const std::vector<float>& samples, size_t length) {
  if (samples.empty()) throw std::invalid_argument("fit_length: empty input");
  if (samples.size() == length) return samples;
  std::vector<float> out(length);
  if (samples.size() > length) {
    const size_t start = (samples.size() - length) / 2;
    std::copy_n(samples.begin() + static_cast<ptrdiff_t>(start), length, out.begin());
  } else {
    for (size_t i = 0; i < length; ++i) out[i] = samples[i % samples.size()];
  }
  return out;
}

Waveform speed_perturb(const Waveform& x, double factor) {
  validate(x);
  if (!(factor > 0.0)) throw std::invalid_argument("speed_perturb: factor must be > 0");
  if (factor == 1.0) return x;
  Waveform scaled = resample(x, x.rate / factor);
  Waveform out;
  out.rate = x.rate;
  out.samples = fit_length(scaled.samples, x.samples.size());
  return out;
}

SpeedGrid speed_grid(int n, double s) {
  if (n < 1 || n % 2 == 0)
    throw std::invalid_argument("speed_grid: n must be odd and >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("speed_grid: s must be > 0");
  if (static_cast<double>((n - 1) / 2) * s >= 1.0)
    throw std::invalid_argument("speed_grid: (n-1)/2 * s must be < 1");
  SpeedGrid g;
  g.n = n;
  g.step = s;
  const int half = (n - 1) / 2;
  for (int k = -half; k <= half; ++k) g.factors.push_back(1.0 + k * s);
  return g;
}

int virtual_label(int base_label, int speed_index, int n) {
  if (base_label < 0 || n < 1 || speed_index < 0 || speed_index >= n)
    throw std::invalid_argument("virtual_label: index out of range");
  return base_label * n + speed_index;
}

int base_from_virtual(int virtual_id, int n) {
  if (virtual_id < 0 || n < 1)
    throw std::invalid_argument("base_from_virtual: index out of range");
  return virtual_id / n;
}

}  // namespace mavgram
