// Acceptance harness: one pass/fail line per criterion, nonzero exit on any
// failure. Heavy transfer runs share their pretrained checkpoints.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mavgram/arcface.hpp"
#include "mavgram/autograd.hpp"
#include "mavgram/checkpoint.hpp"
#include "mavgram/config.hpp"
#include "mavgram/features.hpp"
#include "mavgram/optim.hpp"
#include "mavgram/splits.hpp"
#include "mavgram/synth.hpp"
#include "mavgram/tgram.hpp"
#include "mavgram/train.hpp"
#include "mavgram/waveform.hpp"

#define DOCTEST_CONFIG_DISABLE
#include "oracles.hpp"
#include "support.hpp"

using namespace mavgram;
using nn::Tape;
using nn::TensorPtr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

support::TempDir& work() {
  static support::TempDir dir("acceptance");
  return dir;
}

// ---- shared synthetic corpora and pretrained checkpoints -----------------

const std::vector<uint64_t> kSeeds{1, 2, 3};

struct Shared {
  std::vector<SampleRecord> source;  // 40/class, source profile
  std::vector<SampleRecord> target;  // 40/class, target profile
  struct CellRun {
    Checkpoint ckpt;
    double seconds = 0.0;
  };
  std::map<std::string, CellRun> pretrained;  // "<variant>:<seed>"
};

Shared& shared() {
  static Shared s;
  return s;
}

void ensure_corpora() {
  Shared& s = shared();
  if (s.source.empty())
    s.source = synth_dataset(source_profile(), 5, 40, 7001, work().str("exp_src"));
  if (s.target.empty())
    s.target = synth_dataset(target_profile(), 5, 40, 7002, work().str("exp_tgt"));
}

TrainConfig experiment_config(Variant v, uint64_t seed) {
  TrainConfig cfg = desk_config();
  cfg.variant = v;
  cfg.seed = seed;
  return cfg;
}

const Shared::CellRun& pretrained(Variant v, uint64_t seed) {
  ensure_corpora();
  Shared& s = shared();
  const std::string key = to_string(v) + ":" + std::to_string(seed);
  auto it = s.pretrained.find(key);
  if (it == s.pretrained.end()) {
    const auto t0 = Clock::now();
    const TrainResult res = pretrain(experiment_config(v, seed), s.source);
    Shared::CellRun run{res.best, seconds_since(t0)};
    it = s.pretrained.emplace(key, std::move(run)).first;
  }
  return it->second;
}

double transfer_macro(Variant v, uint64_t seed, double percent) {
  const TrainConfig cfg = experiment_config(v, seed);
  const SplitResult split = split_finetune(shared().target, percent, seed);
  const TrainResult fin = finetune(pretrained(v, seed).ckpt, cfg, split.finetune);
  return evaluate(fin.best, cfg, split.test).macro_accuracy;
}

// ---- finite-difference harness (criterion 2) ------------------------------

TensorPtr randt(std::vector<int> shape, uint64_t seed, float scale = 1.0f) {
  auto t = nn::make_tensor(std::move(shape), true);
  Rng rng(seed);
  for (auto& v : t->v) v = static_cast<float>(rng.uniform(-scale, scale));
  return t;
}

double fd_worst(const std::function<TensorPtr(Tape*)>& forward,
                const std::vector<TensorPtr>& leaves) {
  for (const auto& t : leaves) t->ensure_grad();
  Tape tape;
  TensorPtr out = forward(&tape);
  Rng rng(99);
  std::vector<float> c(out->v.size());
  for (auto& v : c) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  out->ensure_grad();
  out->g = c;
  tape.backward();
  const auto dot = [&] {
    const TensorPtr y = forward(nullptr);
    double acc = 0.0;
    for (size_t i = 0; i < y->v.size(); ++i)
      acc += static_cast<double>(c[i]) * y->v[i];
    return acc;
  };
  return oracle::fd_gradcheck(dot, leaves);
}

// ---- criteria --------------------------------------------------------------

Waveform make_canonical(Waveform w, const FeatureProfile& f) {
  w = resample(w, f.rate);
  w.samples = fit_length(w.samples, static_cast<size_t>(f.samples()));
  return minmax_normalize(w);
}

Check c1_geometry() {
  const TrainConfig cfg = canonical_config();
  const SynthProfile prof = source_profile();
  Rng rng(11);
  const auto fir = synth_fir(prof, rng.stream("fir"));
  const SynthSample raw = synth_sample(prof, 2, fir, rng.stream("sample"));
  const ParamStore params = build_model(cfg, 1);

  const auto t0 = Clock::now();
  const Waveform ac = make_canonical(raw.acoustic, cfg.features);
  const Waveform vib = make_canonical(raw.vibration, cfg.features);
  const FeatureMap mgram = log_mel(ac, cfg.features.stft, cfg.features.mel);
  const FeatureMap agram =
      tgram_feature(params, "tgram_a.", ac, cfg.features.tgram, "A");
  const FeatureMap vgram =
      tgram_feature(params, "tgram_v.", vib, cfg.features.tgram, "V");
  const FeatureMap fused = assemble(Variant::MAV, mgram, agram, vgram);
  const double dt = seconds_since(t0);

  const bool shapes = mgram.channels == 1 && mgram.mels == 64 &&
                      mgram.frames == 376 && agram.mels == 64 &&
                      agram.frames == 376 && vgram.mels == 64 &&
                      vgram.frames == 376 && fused.channels == 3 &&
                      fused.mels == 64 && fused.frames == 376 &&
                      fused.data.size() == size_t{3} * 64 * 376;
  return {shapes && dt < 1.0,
          "Mgram 64x376, MAVgram 3x64x376, featurize " + fmt("%.2f", dt) + " s"};
}

Check c2_gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  const auto track = [&](double e) { worst = std::max(worst, e); };

  {  // conv1d
    auto x = randt({1, 2, 10}, 1), w = randt({3, 2, 3}, 2), b = randt({3}, 3);
    track(fd_worst([&](Tape* t) { return nn::conv1d(t, x, w, b, 2, 1); }, {x, w, b}));
  }
  {  // conv2d
    auto x = randt({2, 2, 5, 6}, 4), w = randt({3, 2, 3, 3}, 5), b = randt({3}, 6);
    track(fd_worst([&](Tape* t) { return nn::conv2d(t, x, w, b, 2, 1); }, {x, w, b}));
  }
  {  // depthwise and global depthwise
    auto x = randt({2, 3, 5, 6}, 7), w = randt({3, 1, 3, 3}, 8), b = randt({3}, 9);
    track(fd_worst(
        [&](Tape* t) { return nn::depthwise_conv2d(t, x, w, b, 1, 1); }, {x, w, b}));
    auto g = randt({3, 1, 5, 6}, 10);
    track(fd_worst(
        [&](Tape* t) { return nn::depthwise_conv2d(t, x, g, nullptr, 1, 0); }, {x, g}));
  }
  {  // batch norm, both modes
    auto x = randt({3, 2, 4, 5}, 11), ga = randt({2}, 12), be = randt({2}, 13);
    auto rm = nn::make_tensor({2}), rv = nn::make_tensor({2});
    rv->v = {1.0f, 1.0f};
    track(fd_worst(
        [&](Tape* t) {
          return nn::batch_norm2d(t, x, ga, be, rm, rv, true, false);
        },
        {x, ga, be}));
    rm->v = {0.2f, -0.1f};
    rv->v = {0.9f, 1.4f};
    track(fd_worst(
        [&](Tape* t) {
          return nn::batch_norm2d(t, x, ga, be, rm, rv, false, false);
        },
        {x, ga, be}));
  }
  {  // layer norm over channels
    auto x = randt({2, 4, 6}, 14), ga = randt({4}, 15), be = randt({4}, 16);
    track(fd_worst(
        [&](Tape* t) { return nn::layer_norm_channels(t, x, ga, be); }, {x, ga, be}));
  }
  {  // prelu / leaky relu
    auto x = randt({2, 3, 4, 4}, 17), s = randt({3}, 18, 0.4f);
    track(fd_worst([&](Tape* t) { return nn::prelu(t, x, s); }, {x, s}));
    track(fd_worst([&](Tape* t) { return nn::leaky_relu(t, x, 0.1f); }, {x}));
  }
  {  // linear
    auto x = randt({3, 7}, 19), w = randt({4, 7}, 20), b = randt({4}, 21);
    track(fd_worst([&](Tape* t) { return nn::linear(t, x, w, b); }, {x, w, b}));
  }
  {  // add + concat + reshape + flatten
    auto a = randt({2, 2, 3, 4}, 22), b = randt({2, 2, 3, 4}, 23);
    auto c = randt({2, 1, 3, 4}, 24);
    track(fd_worst(
        [&](Tape* t) {
          auto sum = nn::add(t, a, b);
          auto cat = nn::concat_channels(t, {sum, c});
          auto r = nn::reshape(t, cat, {2, 36, 1, 1});
          return nn::flatten_spatial(t, r);
        },
        {a, b, c}));
  }
  double micro = 0.0;
  {  // micro end-to-end: two conv layers + margin head, batch 2
    auto x = randt({2, 1, 6, 8}, 51);
    auto w1 = randt({3, 1, 3, 3}, 52), b1 = randt({3}, 53);
    auto slope = randt({3}, 54, 0.4f);
    auto w2 = randt({4, 3, 3, 3}, 55), b2 = randt({4}, 56);
    auto we = randt({6, 48}, 57, 0.4f), be = randt({6}, 58);
    auto head = randt({5, 6}, 59);
    const std::vector<int> targets{1, 3};
    const ArcFaceConfig arc{0.7, 30.0};
    const std::vector<TensorPtr> leaves{x, w1, b1, slope, w2, b2, we, be, head};
    for (const auto& t : leaves) t->ensure_grad();
    const auto run = [&](Tape* t) {
      auto h = nn::conv2d(t, x, w1, b1, 1, 1);
      h = nn::prelu(t, h, slope);
      h = nn::conv2d(t, h, w2, b2, 2, 1);
      h = nn::reshape(t, h, {2, 48});
      auto emb = nn::linear(t, h, we, be);
      auto logits = arcface_logits(t, emb, head, targets, arc);
      return softmax_ce_mean(t, logits, targets);
    };
    Tape tape;
    run(&tape);
    tape.backward();
    micro = oracle::fd_gradcheck([&] { return run(nullptr); }, leaves);
    track(micro);
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-3 && dt < 60.0,
          "worst rel err " + fmt("%.2e", worst) + " (end-to-end " +
              fmt("%.2e", micro) + "), " + fmt("%.1f", dt) + " s"};
}

Check c3_arcface() {
  const auto t0 = Clock::now();
  auto emb = randt({4, 16}, 31);
  auto head = randt({9, 16}, 32);
  const std::vector<int> targets{0, 3, 5, 8};
  bool ok = true;
  std::string why;

  // m = 0 reduces to pure scaled cosines, bitwise
  const auto zero = arcface_logits(nullptr, emb, head, targets, {0.0, 30.0});
  const auto inference = arcface_logits(nullptr, emb, head, {}, {0.7, 30.0});
  if (zero->v != inference->v) {
    ok = false;
    why += "m=0 reduction differs; ";
  }

  // target logit decreases strictly in the margin
  double prev = 1e300;
  for (int k = 0; k <= 7; ++k) {
    const double m = 0.1 * k;
    const auto lg = arcface_logits(nullptr, emb, head, targets, {m, 30.0});
    const double target_logit = lg->v[static_cast<size_t>(0) * 9 + targets[0]];
    if (!(target_logit < prev)) {
      ok = false;
      why += "margin grid not strictly decreasing at m=" + fmt("%.1f", m) + "; ";
    }
    prev = target_logit;
  }

  // scaling the embeddings never moves the argmax
  for (const float c : {0.01f, 250.0f}) {
    auto scaled = nn::make_tensor({4, 16});
    for (size_t i = 0; i < emb->v.size(); ++i) scaled->v[i] = emb->v[i] * c;
    const auto a = arcface_logits(nullptr, emb, head, {}, {0.7, 30.0});
    const auto b = arcface_logits(nullptr, scaled, head, {}, {0.7, 30.0});
    for (int r = 0; r < 4; ++r) {
      const auto row_argmax = [&](const TensorPtr& t) {
        int best = 0;
        for (int j = 1; j < 9; ++j)
          if (t->v[r * 9 + j] > t->v[r * 9 + best]) best = j;
        return best;
      };
      if (row_argmax(a) != row_argmax(b)) {
        ok = false;
        why += "argmax moved under scale " + fmt("%.2f", c) + "; ";
      }
    }
  }
  const double dt = seconds_since(t0);
  return {ok && dt < 1.0, ok ? "reduction, monotonicity and scale invariance hold"
                             : why};
}

Check c4_schedule() {
  const LrSchedule sched{0.0005, 0.0, 200};
  const bool ok = lr_at(sched, 0) == 0.0005 && lr_at(sched, 100) == 0.00025 &&
                  lr_at(sched, 200) == 0.0;
  return {ok, "lr(0)=" + fmt("%.6f", lr_at(sched, 0)) +
                  " lr(100)=" + fmt("%.6f", lr_at(sched, 100)) +
                  " lr(200)=" + fmt("%.6f", lr_at(sched, 200))};
}

TrainConfig micro_config(uint64_t seed, int epochs) {
  TrainConfig cfg = desk_config();
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.mfn.stem_channels = 8;
  cfg.mfn.stages = {{2, 8, 2, 2}};
  cfg.mfn.head_channels = 16;
  cfg.mfn.embed_dim = 8;
  return cfg;
}

Check c5_freeze() {
  const auto recs = synth_dataset(target_profile(), 3, 3, 501, work().str("c5"));
  const TrainConfig cfg = micro_config(5, 2);
  const TrainResult pre = pretrain(cfg, recs);
  const TrainResult fin = finetune(pre.best, cfg, recs);

  size_t frozen = 0;
  bool others_changed = false;
  for (const auto& t : fin.best.tensors) {
    const TensorRecord* old = nullptr;
    for (const auto& o : pre.best.tensors)
      if (o.name == t.name) old = &o;
    if (!old) return {false, "tensor " + t.name + " missing from the pretrain"};
    if (group_from_byte(t.group) == Group::mfn_backbone) {
      if (t.values != old->values)
        return {false, "backbone tensor " + t.name + " changed"};
      ++frozen;
    } else if (t.values != old->values) {
      others_changed = true;
    }
  }
  return {frozen > 0 && others_changed,
          std::to_string(frozen) + " backbone tensors bitwise frozen, "
          "running stats included, trainable groups moved"};
}

Check c6_speed_grid() {
  const auto t0 = Clock::now();
  const SpeedGrid grid = speed_grid(7, 0.1);
  Waveform tone;
  tone.rate = 48000.0;
  tone.samples.resize(192000);
  for (size_t i = 0; i < tone.samples.size(); ++i)
    tone.samples[i] =
        static_cast<float>(std::sin(2.0 * M_PI * 100.0 * static_cast<double>(i) / 48000.0));

  bool ok = true;
  std::string detail = "peaks ";
  for (const double f : grid.factors) {
    const Waveform shifted = speed_perturb(tone, f);
    const double peak = oracle::dft_peak_hz(shifted.samples, shifted.rate);
    const double bin = oracle::dft_bin_hz(shifted.samples, shifted.rate);
    if (std::abs(peak - 100.0 * f) > bin) ok = false;
    detail += fmt("%.1f", peak) + " ";
  }
  const double dt = seconds_since(t0);
  return {ok && dt < 5.0, detail + "Hz for 100 Hz x {0.7..1.3}, " +
                              fmt("%.1f", dt) + " s"};
}

Check c7_determinism() {
  const auto t0 = Clock::now();
  const auto src = synth_dataset(source_profile(), 5, 2, 701, work().str("c7s"));
  const auto tgt = synth_dataset(target_profile(), 5, 4, 702, work().str("c7t"));
  const TrainConfig cfg = experiment_config(Variant::MAV, 3);  // full desk preset

  std::string pre_bytes[2], fin_bytes[2], reports[2];
  for (int run = 0; run < 2; ++run) {
    const TrainResult pre = pretrain(cfg, src);
    const std::string pre_path = work().str("c7_pre.ckpt");
    save_checkpoint(pre.best, pre_path);
    pre_bytes[run] = support::read_text(pre_path);

    const SplitResult split = split_finetune(tgt, 15.0, cfg.seed);
    const TrainResult fin = finetune(pre.best, cfg, split.finetune);
    const std::string fin_path = work().str("c7_fin.ckpt");
    save_checkpoint(fin.best, fin_path);
    fin_bytes[run] = support::read_text(fin_path);

    reports[run] = evaluate(fin.best, cfg, split.test).to_text();
  }
  const double dt = seconds_since(t0);
  const bool ok = pre_bytes[0] == pre_bytes[1] && fin_bytes[0] == fin_bytes[1] &&
                  reports[0] == reports[1];
  return {ok && dt < 600.0,
          std::string(ok ? "checkpoints and reports bitwise identical"
                         : "runs diverged") +
              ", " + fmt("%.1f", dt) + " s"};
}

Check c8_roundtrip() {
  const auto recs = synth_dataset(target_profile(), 2, 2, 801, work().str("c8"));
  const TrainConfig cfg = micro_config(8, 2);
  ParamStore params = build_model(cfg, cfg.seed);
  const auto data = expand_dataset(recs, cfg, false);
  const std::vector<size_t> batch{0, 1, 2, 3};
  const auto before = embed_batch(nullptr, params, cfg, data, batch, false);

  const std::string path = work().str("c8.ckpt");
  save_checkpoint(checkpoint_from_params(params, checkpoint_metadata(cfg, "t", 0)),
                  path);
  ParamStore fresh = build_model(cfg, cfg.seed + 17);
  params_from_checkpoint(load_checkpoint(path), fresh);
  const auto after = embed_batch(nullptr, fresh, cfg, data, batch, false);

  return {before->v == after->v, "save -> load -> forward bitwise identical on a "
                                 "fixed batch of 4"};
}

Check c9_transfer() {
  const auto t0 = Clock::now();
  double sum = 0.0;
  std::string detail = "macro ";
  for (const uint64_t seed : kSeeds) {
    const double m = transfer_macro(Variant::MAV, seed, 15.0);
    sum += m;
    detail += fmt("%.3f", m) + " ";
  }
  const double mean = sum / static_cast<double>(kSeeds.size());
  const double dt = seconds_since(t0);
  detail += "mean " + fmt("%.3f", mean) + " at 15%, " + fmt("%.0f", dt) + " s";
  return {mean >= 0.90 && dt <= 1800.0, detail};
}

Check c10_ablation() {
  const auto t0 = Clock::now();
  std::map<Variant, double> mean;
  std::string detail;
  for (const Variant v : {Variant::MAV, Variant::ST, Variant::MV, Variant::AV}) {
    double sum = 0.0;
    for (const uint64_t seed : kSeeds) sum += transfer_macro(v, seed, 25.0);
    mean[v] = sum / static_cast<double>(kSeeds.size());
    detail += to_string(v) + " " + fmt("%.3f", mean[v]) + " ";
  }
  // the full matrix cost includes the checkpoints first trained for the
  // transfer criterion and reused here
  double matrix = seconds_since(t0);
  for (const uint64_t seed : kSeeds)
    matrix += pretrained(Variant::MAV, seed).seconds;

  const bool fused_best =
      mean[Variant::MAV] >= std::max(mean[Variant::ST], mean[Variant::MV]) - 0.02;
  const bool av_worst =
      std::min(mean[Variant::ST], mean[Variant::MV]) >= mean[Variant::AV] + 0.05;
  detail += "at 25%, matrix " + fmt("%.0f", matrix) + " s";
  if (!fused_best) detail += "; fused variant not within 0.02 of the best pair";
  if (!av_worst) detail += "; AV not at least 0.05 below ST/MV";
  return {fused_best && av_worst && matrix <= 7200.0, detail};
}

Check c11_generator() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const SynthProfile& prof : {source_profile(), target_profile()}) {
    Rng rng(1101);
    const auto fir = synth_fir(prof, rng.stream("fir"));
    for (int label = 1; label <= 4; ++label) {
      const auto s =
          synth_sample(prof, label, fir, rng.stream("s" + std::to_string(label)));
      const double want = prof.shaft_hz * characteristic_multiplier(label);
      const auto env =
          oracle::envelope_spectrum(s.vibration.samples, prof.vibration_rate);
      const double got = env.peak_hz(want * 0.5, want * 1.5);
      if (std::abs(got - want) > 0.02 * want) {
        ok = false;
        detail += prof.name + " label " + std::to_string(label) + " peak " +
                  fmt("%.2f", got) + " vs " + fmt("%.2f", want) + " Hz; ";
      }
    }
    const auto healthy = synth_sample(prof, 0, fir, rng.stream("s0"));
    const auto env =
        oracle::envelope_spectrum(healthy.vibration.samples, prof.vibration_rate);
    for (int label = 1; label <= 4; ++label) {
      const double f = prof.shaft_hz * characteristic_multiplier(label);
      if (env.band_to_median(f, 0.02) >= 3.0) {
        ok = false;
        detail += prof.name + " healthy shows a peak near " + fmt("%.2f", f) + " Hz; ";
      }
    }
  }
  const double dt = seconds_since(t0);
  if (ok)
    detail = "fault peaks within 2%, healthy flat, both profiles, " +
             fmt("%.1f", dt) + " s";
  return {ok && dt < 30.0, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "feature geometry", c1_geometry},
      {2, "gradient checks", c2_gradients},
      {3, "margin-head properties", c3_arcface},
      {4, "schedule endpoints", c4_schedule},
      {5, "backbone freeze", c5_freeze},
      {6, "speed perturbation", c6_speed_grid},
      {7, "determinism", c7_determinism},
      {8, "checkpoint round-trip", c8_roundtrip},
      {9, "synthetic transfer", c9_transfer},
      {10, "ablation ordering", c10_ablation},
      {11, "generator fidelity", c11_generator},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Check result;
    const auto t0 = Clock::now();
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    std::printf("%s  criterion %2d  %-22s  %s  [%.1f s]\n",
                result.pass ? "PASS" : "FAIL", c.number, c.name,
                result.detail.c_str(), dt);
    std::fflush(stdout);
    if (!result.pass) ++failures;
  }
  std::printf("%d/11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
