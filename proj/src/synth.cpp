#include "mavgram/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "mavgram/wav_io.hpp"

namespace fs = std::filesystem;

namespace mavgram {

void SynthProfile::validate() const {
  if (!(shaft_hz > 0.0) || !(res_hz > 0.0) || !(decay > 0.0) ||
      !(acoustic_rate > 0.0) || !(vibration_rate > 0.0) || !(duration > 0.0) ||
      !(hum_hz > 0.0))
    throw std::invalid_argument("synth: non-positive profile field");
  // The impulse-rate and hum lines must be representable in both streams; the
  // ring-down carrier only needs the acoustic Nyquist (a vibration sensor
  // slower than the resonance aliases the carrier but keeps the envelope).
  const double nyq = std::min(acoustic_rate, vibration_rate) / 2.0;
  if (hum_hz >= nyq || 5.4 * shaft_hz >= nyq || res_hz >= acoustic_rate / 2.0)
    throw std::invalid_argument("synth: profile frequency above Nyquist");
  if (!(std::isfinite(snr_db))) throw std::invalid_argument("synth: bad SNR");
  if (fir_taps < 1) throw std::invalid_argument("synth: bad FIR length");
  if (amp_jitter < 0.0 || amp_jitter >= 1.0)
    throw std::invalid_argument("synth: amplitude jitter must lie in [0,1)");
}

SynthProfile source_profile() { return SynthProfile{}; }

SynthProfile target_profile() {
  SynthProfile p;
  p.name = "target";
  p.shaft_hz = 25.0;
  p.res_hz = 3200.0;
  p.snr_db = 6.0;
  p.acoustic_rate = 42000.0;
  p.vibration_rate = 42000.0;
  p.duration = 1.0;
  p.hum_hz = 60.0;  // different mains grid; lands on BSF = 2.4 x 25 Hz
  return p;
}

SynthProfile profile_by_name(const std::string& name) {
  if (name == "source") return source_profile();
  if (name == "target") return target_profile();
  throw std::invalid_argument("unknown profile '" + name +
                              "' (valid profiles: source, target)");
}

double characteristic_multiplier(int label) {
  switch (label) {
    case 1: return 3.6;  // outer race, BPFO
    case 2: return 5.4;  // inner race, BPFI
    case 3: return 2.4;  // ball spin, BSF
    case 4: return 0.4;  // cage, FTF
  }
  throw std::invalid_argument("no characteristic frequency for label " +
                              std::to_string(label));
}

namespace {

struct ImpulseTrain {
  std::vector<double> times;
  std::vector<double> amps;
};

ImpulseTrain draw_train(const SynthProfile& p, int label, Rng rng) {
  ImpulseTrain tr;
  const double fc = p.shaft_hz * characteristic_multiplier(label);
  const double period = 1.0 / fc;
  // random train phase plus ~1% roller slip keep the mean rate at fc while
  // ruling out fixed time templates
  double t = rng.uniform(0.0, period);
  while (t < p.duration) {
    tr.times.push_back(t);
    tr.amps.push_back(p.impulse_amp *
                      (1.0 + rng.uniform(-p.amp_jitter, p.amp_jitter)));
    t += period * (1.0 + rng.uniform(-0.01, 0.01));
  }
  return tr;
}

// Renders the ring-down sum at `rate`; inner race gets |cos(2*pi*f_r*t)| load
// modulation.
std::vector<double> render_train(const SynthProfile& p, int label,
                                 const ImpulseTrain& tr, double rate) {
  const auto n = static_cast<size_t>(std::llround(p.duration * rate));
  std::vector<double> x(n, 0.0);
  const double support = std::log(1e4) / p.decay;  // amplitude below 1e-4 after this
  const auto span = static_cast<size_t>(std::ceil(support * rate));
  for (size_t i = 0; i < tr.times.size(); ++i) {
    const double t0 = tr.times[i];
    const auto start = static_cast<size_t>(std::ceil(t0 * rate));
    const size_t stop = std::min(n, start + span);
    for (size_t k = start; k < stop; ++k) {
      const double dt = k / rate - t0;
      x[k] += tr.amps[i] * std::exp(-p.decay * dt) *
              std::sin(2.0 * M_PI * p.res_hz * dt);
    }
  }
  if (label == 2) {
    for (size_t k = 0; k < n; ++k)
      x[k] *= std::abs(std::cos(2.0 * M_PI * p.shaft_hz * k / rate));
  }
  return x;
}

std::vector<double> hum(double freq, double amp, double rate, size_t n) {
  std::vector<double> x(n);
  for (size_t k = 0; k < n; ++k) {
    const double t = k / rate;
    x[k] = amp * (std::sin(2.0 * M_PI * freq * t) +
                  0.5 * std::sin(2.0 * M_PI * 2.0 * freq * t));
  }
  return x;
}

void add_noise(std::vector<double>& x, double snr_db, Rng rng) {
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(x.size());
  if (power <= 0.0) power = 1e-12;
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  for (double& v : x) v += sigma * rng.normal();
}

std::vector<double> convolve_fir(const std::vector<double>& x,
                                 const std::vector<double>& h) {
  std::vector<double> y(x.size(), 0.0);
  for (size_t i = 0; i < x.size(); ++i) {
    const size_t kmax = std::min(h.size(), i + 1);
    double acc = 0.0;
    for (size_t k = 0; k < kmax; ++k) acc += h[k] * x[i - k];
    y[i] = acc;
  }
  return y;
}

Waveform to_waveform(const std::vector<double>& x, double rate) {
  Waveform w;
  w.rate = rate;
  w.samples.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) w.samples[i] = static_cast<float>(x[i]);
  return w;
}

}  // namespace

std::vector<double> synth_fir(const SynthProfile& profile, const Rng& rng) {
  Rng r = rng.stream("fir");
  std::vector<double> h(static_cast<size_t>(profile.fir_taps), 0.0);
  // a dominant direct path plus weak decaying reflections: recordings differ
  // by a few dB of spectral ripple, not by deep notches
  h[0] = 1.0;
  double norm = 1.0;
  for (size_t k = 1; k < h.size(); ++k) {
    const double env =
        0.15 * std::exp(-6.0 * static_cast<double>(k) / h.size());
    h[k] = env * r.normal();
    norm += h[k] * h[k];
  }
  norm = std::sqrt(norm);
  for (double& v : h) v /= norm;
  return h;
}

SynthSample synth_sample(const SynthProfile& profile, int label,
                         const std::vector<double>& fir, const Rng& rng) {
  profile.validate();
  if (label < 0 || label > 4) throw std::invalid_argument("synth: label out of range");
  const auto nv =
      static_cast<size_t>(std::llround(profile.duration * profile.vibration_rate));
  const auto na =
      static_cast<size_t>(std::llround(profile.duration * profile.acoustic_rate));

  // mains pickup sits at the same level in every class so hum carries no
  // label information
  std::vector<double> vib, ac;
  if (label == 0) {
    // healthy: shaft-rate hum on the vibration channel, mains hum acoustically
    vib = hum(profile.shaft_hz, 0.4 * profile.impulse_amp, profile.vibration_rate, nv);
    ac = hum(profile.hum_hz, 0.25 * profile.impulse_amp, profile.acoustic_rate, na);
  } else {
    const ImpulseTrain tr = draw_train(profile, label, rng.stream("impulses"));
    vib = render_train(profile, label, tr, profile.vibration_rate);
    ac = convolve_fir(render_train(profile, label, tr, profile.acoustic_rate), fir);
    const auto mains = hum(profile.hum_hz, 0.25 * profile.impulse_amp,
                           profile.acoustic_rate, na);
    for (size_t i = 0; i < na; ++i) ac[i] += mains[i];
  }
  add_noise(vib, profile.snr_db, rng.stream("noise_v"));
  add_noise(ac, profile.snr_db, rng.stream("noise_a"));

  // keep the acoustic channel inside 16-bit range with headroom
  double peak = 0.0;
  for (double v : ac) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : ac) v *= 0.95 / peak;

  SynthSample s;
  s.acoustic = to_waveform(ac, profile.acoustic_rate);
  s.vibration = to_waveform(vib, profile.vibration_rate);
  return s;
}

std::vector<SampleRecord> synth_dataset(const SynthProfile& profile, int classes,
                                        int per_class, uint64_t seed,
                                        const std::string& out_dir) {
  profile.validate();
  if (classes < 1 || classes > 5)
    throw std::invalid_argument("synth: classes must lie in 1..5");
  if (per_class < 1) throw std::invalid_argument("synth: per_class must be >= 1");

  fs::create_directories(fs::path(out_dir) / "audio");
  fs::create_directories(fs::path(out_dir) / "vib");

  const Rng base = Rng(seed).stream("synth:" + profile.name);

  std::vector<SampleRecord> records;
  char idbuf[64];
  for (int label = 0; label < classes; ++label) {
    for (int i = 0; i < per_class; ++i) {
      std::snprintf(idbuf, sizeof idbuf, "%s-%d-%03d", profile.name.c_str(), label, i);
      const std::string id = idbuf;
      const Rng rng = base.stream("sample:" + id);
      // each recording gets its own acoustic path (microphone placement
      // varies run to run)
      const auto fir = synth_fir(profile, rng);
      const SynthSample s = synth_sample(profile, label, fir, rng);

      SampleRecord r;
      r.id = id;
      r.acoustic_path = (fs::path(out_dir) / "audio" / (id + ".wav")).string();
      r.vibration_path = (fs::path(out_dir) / "vib" / (id + ".txt")).string();
      r.acoustic_rate = profile.acoustic_rate;
      r.vibration_rate = profile.vibration_rate;
      r.label = label;
      r.split = SplitTag::train;
      write_wav(r.acoustic_path, s.acoustic);
      write_vibration_text(r.vibration_path, s.vibration);
      records.push_back(std::move(r));
    }
  }
  write_manifest((fs::path(out_dir) / "manifest.jsonl").string(), records);
  return records;
}

}  // namespace mavgram
