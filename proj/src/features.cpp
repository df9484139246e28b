#include "mavgram/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mavgram {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_radix2: size must be a power of two");
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& c : a) c /= static_cast<double>(n);
}

static void check_stft_cfg(const StftConfig& cfg) {
  if (cfg.n_fft < 2 || (cfg.n_fft & (cfg.n_fft - 1)) != 0)
    throw std::invalid_argument("stft: n_fft must be a power of two");
  if (!(cfg.hop > 0 && cfg.hop <= cfg.win_length && cfg.win_length <= cfg.n_fft))
    throw std::invalid_argument("stft: need hop <= win_length <= n_fft");
}

int stft_frames(size_t len, const StftConfig& cfg) {
  check_stft_cfg(cfg);
  if (cfg.center_pad) return static_cast<int>(len / static_cast<size_t>(cfg.hop)) + 1;
  if (len < static_cast<size_t>(cfg.win_length)) return 0;
  return static_cast<int>((len - cfg.win_length) / cfg.hop) + 1;
}

namespace {

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.win_length, 1.0);
  if (cfg.window == WindowKind::hann) {
    // periodic Hann
    for (int i = 0; i < cfg.win_length; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / cfg.win_length);
  }
  return w;
}

// reflect index into [0, len) without repeating the edge sample
size_t reflect_index(long long i, long long len) {
  while (i < 0 || i >= len) {
    if (i < 0) i = -i;
    if (i >= len) i = 2 * len - 2 - i;
  }
  return static_cast<size_t>(i);
}

}  // namespace

Grid stft_power(const Waveform& x, const StftConfig& cfg) {
  validate(x);
  check_stft_cfg(cfg);
  const auto len = static_cast<long long>(x.samples.size());
  const int n_frames = stft_frames(x.samples.size(), cfg);
  if (n_frames <= 0) throw std::invalid_argument("stft: input too short");
  const int bins = cfg.n_fft / 2 + 1;
  const int pad = cfg.center_pad ? cfg.n_fft / 2 : 0;
  const auto window = make_window(cfg);
  const int off = (cfg.n_fft - cfg.win_length) / 2;  // center shorter windows

  Grid out;
  out.rows = bins;
  out.cols = n_frames;
  out.v.assign(static_cast<size_t>(bins) * n_frames, 0.0f);

  std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft));
  for (int t = 0; t < n_frames; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    const long long start = static_cast<long long>(t) * cfg.hop - pad;
    for (int i = 0; i < cfg.win_length; ++i) {
      const long long src = start + off + i;
      const double s = cfg.center_pad
                           ? x.samples[reflect_index(src, len)]
                           : (src >= 0 && src < len ? x.samples[static_cast<size_t>(src)] : 0.0);
      buf[static_cast<size_t>(off + i)] = s * window[static_cast<size_t>(i)];
    }
    fft_radix2(buf);
    for (int b = 0; b < bins; ++b)
      out.at(b, t) = static_cast<float>(std::norm(buf[static_cast<size_t>(b)]));
  }
  return out;
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

Grid mel_weights(const MelConfig& mel, int n_fft, double sample_rate) {
  if (mel.mels < 2) throw std::invalid_argument("mel_weights: need M >= 2");
  if (!(mel.fmin >= 0.0 && mel.fmin < mel.fmax && mel.fmax <= sample_rate / 2.0 + 1e-9))
    throw std::invalid_argument("mel_weights: need 0 <= fmin < fmax <= rate/2");
  const int bins = n_fft / 2 + 1;
  const int M = mel.mels;

  std::vector<double> edges(static_cast<size_t>(M) + 2);
  const double m_lo = hz_to_mel(mel.fmin), m_hi = hz_to_mel(mel.fmax);
  for (int i = 0; i < M + 2; ++i)
    edges[static_cast<size_t>(i)] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (M + 1));

  Grid w;
  w.rows = M;
  w.cols = bins;
  w.v.assign(static_cast<size_t>(M) * bins, 0.0f);
  for (int m = 0; m < M; ++m) {
    const double lo = edges[static_cast<size_t>(m)];
    const double mid = edges[static_cast<size_t>(m) + 1];
    const double hi = edges[static_cast<size_t>(m) + 2];
    double row_max = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double f = b * sample_rate / n_fft;
      double val = 0.0;
      if (f > lo && f < mid)
        val = (f - lo) / (mid - lo);
      else if (f == mid)
        val = 1.0;
      else if (f > mid && f < hi)
        val = (hi - f) / (hi - mid);
      w.at(m, b) = static_cast<float>(val);
      row_max = std::max(row_max, val);
    }
    if (row_max <= 0.0)
      throw std::invalid_argument("mel_weights: empty filter row (M too large for n_fft)");
    for (int b = 0; b < bins; ++b) w.at(m, b) = static_cast<float>(w.at(m, b) / row_max);
  }

  // every bin strictly inside (fmin, fmax) must be covered by some filter
  for (int b = 0; b < bins; ++b) {
    const double f = b * sample_rate / n_fft;
    if (f <= edges.front() || f >= edges.back()) continue;
    double colsum = 0.0;
    for (int m = 0; m < M; ++m) colsum += w.at(m, b);
    if (!(colsum > 0.0))
      throw std::invalid_argument("mel_weights: uncovered STFT bin inside (fmin, fmax)");
  }
  return w;
}

FeatureMap log_mel(const Waveform& x, const StftConfig& stft, const MelConfig& mel) {
  const Grid power = stft_power(x, stft);
  const Grid w = mel_weights(mel, stft.n_fft, x.rate);
  FeatureMap out;
  out.channels = 1;
  out.mels = mel.mels;
  out.frames = power.cols;
  out.channel_tags = {"M"};
  out.data.resize(static_cast<size_t>(mel.mels) * power.cols);
  const double floor = mel.log_floor;
  // Bands are divided by their filter weight sum so equal-power-per-bin input
  // maps to a flat mel response despite peak-normalized triangles.
  std::vector<double> gain(mel.mels, 0.0);
  for (int m = 0; m < mel.mels; ++m) {
    for (int b = 0; b < w.cols; ++b) gain[m] += w.at(m, b);
    if (gain[m] <= 0.0) gain[m] = 1.0;
  }
  for (int m = 0; m < mel.mels; ++m) {
    for (int t = 0; t < power.cols; ++t) {
      double acc = 0.0;
      for (int b = 0; b < power.rows; ++b) acc += static_cast<double>(w.at(m, b)) * power.at(b, t);
      out.at(0, m, t) = static_cast<float>(std::log(std::max(acc / gain[m], floor)));
    }
  }
  return out;
}

Variant variant_from_string(const std::string& s) {
  if (s == "MAV") return Variant::MAV;
  if (s == "ST") return Variant::ST;
  if (s == "MV") return Variant::MV;
  if (s == "AV") return Variant::AV;
  throw std::invalid_argument("unknown feature variant: " + s +
                              " (expected MAV, ST, MV or AV)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::MAV: return "MAV";
    case Variant::ST: return "ST";
    case Variant::MV: return "MV";
    case Variant::AV: return "AV";
  }
  return "?";
}

std::vector<std::string> variant_tags(Variant v) {
  switch (v) {
    case Variant::MAV: return {"M", "A", "V"};
    case Variant::ST: return {"M", "A"};
    case Variant::MV: return {"M", "V"};
    case Variant::AV: return {"A", "V"};
  }
  return {};
}

bool variant_uses(Variant v, const std::string& tag) {
  for (const auto& t : variant_tags(v))
    if (t == tag) return true;
  return false;
}

FeatureMap assemble(Variant v, const FeatureMap& mgram, const FeatureMap& agram,
                    const FeatureMap& vgram) {
  const auto tags = variant_tags(v);
  std::vector<const FeatureMap*> parts;
  for (const auto& tag : tags) {
    if (tag == "M") parts.push_back(&mgram);
    else if (tag == "A") parts.push_back(&agram);
    else parts.push_back(&vgram);
  }
  FeatureMap out;
  out.mels = parts.front()->mels;
  out.frames = parts.front()->frames;
  for (const auto* p : parts) {
    if (p->channels != 1 || p->mels != out.mels || p->frames != out.frames)
      throw std::invalid_argument("assemble: feature map shape mismatch");
  }
  out.channels = static_cast<int>(parts.size());
  out.channel_tags = tags;
  out.data.reserve(static_cast<size_t>(out.channels) * out.mels * out.frames);
  for (const auto* p : parts)
    out.data.insert(out.data.end(), p->data.begin(), p->data.end());
  return out;
}

}  // namespace mavgram
