#include "mavgram/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "mavgram/mfn.hpp"
#include "mavgram/optim.hpp"
#include "mavgram/tgram.hpp"
#include "mavgram/wav_io.hpp"

namespace mavgram {

namespace {

Waveform load_stream(const std::string& path, double declared_rate) {
  const bool is_wav = path.size() >= 4 &&
                      path.compare(path.size() - 4, 4, ".wav") == 0;
  if (is_wav) return read_wav(path);
  return read_vibration_text(path, declared_rate);
}

Waveform canonical_stream(Waveform w, const FeatureProfile& f) {
  w = resample(w, f.rate);
  w.samples = fit_length(w.samples, static_cast<size_t>(f.samples()));
  return minmax_normalize(w);
}

}  // namespace

LoadedSample load_and_canonicalize(const SampleRecord& rec,
                                   const FeatureProfile& features) {
  LoadedSample s;
  s.label = rec.label;
  s.acoustic = canonical_stream(load_stream(rec.acoustic_path, rec.acoustic_rate),
                                features);
  s.vibration = canonical_stream(load_stream(rec.vibration_path, rec.vibration_rate),
                                 features);
  return s;
}

std::vector<ExpandedSample> expand_dataset(const std::vector<SampleRecord>& records,
                                           const TrainConfig& cfg, bool perturb) {
  const bool use_m = variant_uses(cfg.variant, "M");
  const bool use_a = variant_uses(cfg.variant, "A");
  const bool use_v = variant_uses(cfg.variant, "V");
  const auto grid = perturb ? speed_grid(cfg.speed_n, cfg.speed_s)
                            : speed_grid(1, cfg.speed_s);

  std::vector<ExpandedSample> out;
  out.reserve(records.size() * grid.factors.size());
  for (const auto& rec : records) {
    const LoadedSample base = load_and_canonicalize(rec, cfg.features);
    for (size_t k = 0; k < grid.factors.size(); ++k) {
      ExpandedSample ex;
      ex.base_label = base.label;
      ex.speed_index = static_cast<int>(k);
      // unperturbed evaluation still collapses via the training grid size
      ex.virtual_target =
          perturb ? virtual_label(base.label, static_cast<int>(k), cfg.speed_n)
                  : virtual_label(base.label, cfg.speed_n / 2, cfg.speed_n);
      const double factor = grid.factors[k];
      const Waveform ac = speed_perturb(base.acoustic, factor);
      const Waveform vb = speed_perturb(base.vibration, factor);
      if (use_m) {
        const FeatureMap m = log_mel(ac, cfg.features.stft, cfg.features.mel);
        ex.mgram = m.data;
      }
      if (use_a) ex.acoustic = ac.samples;
      if (use_v) ex.vibration = vb.samples;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

ParamStore build_model(const TrainConfig& cfg, uint64_t init_seed) {
  cfg.validate();
  const Rng init(Rng(init_seed).stream("init"));
  ParamStore params;
  if (variant_uses(cfg.variant, "A"))
    tgram_build(params, "tgram_a.", Group::tgram_a, cfg.features.tgram, init);
  if (variant_uses(cfg.variant, "V"))
    tgram_build(params, "tgram_v.", Group::tgram_v, cfg.features.tgram, init);
  mfn_build(params, cfg.resolved_mfn(), init);
  arcface_build(params, kBaseClasses * cfg.speed_n, cfg.mfn.embed_dim, init);
  return params;
}

nn::TensorPtr embed_batch(nn::Tape* tape, const ParamStore& params,
                          const TrainConfig& cfg,
                          const std::vector<ExpandedSample>& data,
                          const std::vector<size_t>& batch, bool train_mode) {
  if (batch.empty()) throw std::invalid_argument("train: empty batch");
  const int B = static_cast<int>(batch.size());
  const int M = cfg.features.mel.mels;
  const int N = cfg.features.frames();
  const auto L = static_cast<int>(cfg.features.samples());
  const bool use_m = variant_uses(cfg.variant, "M");
  const bool use_a = variant_uses(cfg.variant, "A");
  const bool use_v = variant_uses(cfg.variant, "V");

  std::vector<nn::TensorPtr> channels;
  if (use_m) {
    auto mg = nn::make_tensor({B, 1, M, N}, false);
    for (int b = 0; b < B; ++b) {
      const auto& src = data[batch[static_cast<size_t>(b)]].mgram;
      if (static_cast<int>(src.size()) != M * N)
        throw std::invalid_argument("train: cached mel map has wrong shape");
      std::copy(src.begin(), src.end(),
                mg->v.begin() + static_cast<size_t>(b) * M * N);
    }
    channels.push_back(mg);
  }
  auto tgram_channel = [&](const char* prefix, bool vibration) {
    auto x = nn::make_tensor({B, 1, L}, false);
    for (int b = 0; b < B; ++b) {
      const auto& ex = data[batch[static_cast<size_t>(b)]];
      const auto& src = vibration ? ex.vibration : ex.acoustic;
      if (static_cast<int>(src.size()) != L)
        throw std::invalid_argument("train: cached waveform has wrong length");
      std::copy(src.begin(), src.end(), x->v.begin() + static_cast<size_t>(b) * L);
    }
    auto g = tgram_forward(tape, params, prefix, x, cfg.features.tgram);
    channels.push_back(nn::reshape(tape, g, {B, 1, M, N}));
  };
  if (use_a) tgram_channel("tgram_a.", false);
  if (use_v) tgram_channel("tgram_v.", true);

  auto fused = channels.size() == 1 ? channels.front()
                                    : nn::concat_channels(tape, channels);
  return mfn_forward(tape, params, cfg.resolved_mfn(), fused, train_mode);
}

std::map<std::string, std::string> checkpoint_metadata(const TrainConfig& cfg,
                                                       const std::string& stage,
                                                       int best_epoch) {
  std::map<std::string, std::string> md;
  md["stage"] = stage;
  md["config"] = serialize_config(cfg);
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  md["config_hash"] = hex;
  md["epoch"] = std::to_string(best_epoch);
  md["base_classes"] = std::to_string(kBaseClasses);
  std::string cmap;
  for (int b = 0; b < kBaseClasses; ++b) {
    if (b) cmap += '|';
    cmap += std::to_string(b) + ':';
    for (int k = 0; k < cfg.speed_n; ++k) {
      if (k) cmap += ',';
      cmap += std::to_string(virtual_label(b, k, cfg.speed_n));
    }
  }
  md["class_map"] = cmap;
  return md;
}

namespace {

TrainResult run_training(ParamStore& params, const TrainConfig& cfg,
                         const std::vector<ExpandedSample>& data,
                         const std::string& stage, const EpochCallback& on_epoch) {
  const ArcFaceConfig arc{cfg.arc_margin, cfg.arc_scale};
  const LrSchedule sched{cfg.base_lr, cfg.min_lr, cfg.epochs};
  Adam adam;
  const Rng train_rng = Rng(cfg.seed).stream("train");
  auto head = params.get("arcface.w");

  TrainResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng r = train_rng.stream("epoch:" + std::to_string(epoch));
    r.shuffle(order);
    const double lr = lr_at(sched, epoch);

    double loss_sum = 0.0;
    int64_t seen = 0, correct = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t stop = std::min(order.size(), start + cfg.batch);
      const std::vector<size_t> batch(order.begin() + start, order.begin() + stop);
      std::vector<int> targets;
      targets.reserve(batch.size());
      for (size_t i : batch) targets.push_back(data[i].virtual_target);

      nn::Tape tape;
      auto emb = embed_batch(&tape, params, cfg, data, batch, true);
      auto logits = arcface_logits(&tape, emb, head, targets, arc);
      const double loss = softmax_ce_mean(&tape, logits, targets);
      loss_sum += loss * static_cast<double>(batch.size());
      seen += static_cast<int64_t>(batch.size());

      const int C = logits->dim(1);
      for (size_t b = 0; b < batch.size(); ++b) {
        const float* row = &logits->v[b * static_cast<size_t>(C)];
        const int pred = static_cast<int>(std::max_element(row, row + C) - row);
        if (base_from_virtual(pred, cfg.speed_n) == data[batch[b]].base_label)
          ++correct;
      }

      params.zero_grads();
      tape.backward();
      adam.step(params, lr);
    }

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    st.loss = loss_sum / static_cast<double>(seen);
    st.accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    result.log.push_back(st);
    if (on_epoch) on_epoch(st);

    if (st.loss < best_loss) {
      best_loss = st.loss;
      result.best = checkpoint_from_params(params, checkpoint_metadata(cfg, stage, epoch));
    }
  }
  return result;
}

}  // namespace

TrainResult pretrain(const TrainConfig& cfg, const std::vector<SampleRecord>& source,
                     const EpochCallback& on_epoch) {
  cfg.validate();
  if (source.empty()) throw std::invalid_argument("pretrain: empty dataset");
  const auto data = expand_dataset(source, cfg, true);
  ParamStore params = build_model(cfg, cfg.seed);
  return run_training(params, cfg, data, "pretrain", on_epoch);
}

TrainResult finetune(const Checkpoint& ckpt, const TrainConfig& cfg,
                     const std::vector<SampleRecord>& target,
                     const EpochCallback& on_epoch) {
  cfg.validate();
  if (target.empty()) throw std::invalid_argument("finetune: empty dataset");
  const auto want_hash = checkpoint_metadata(cfg, "", 0).at("config_hash");
  const auto it = ckpt.metadata.find("config_hash");
  if (it == ckpt.metadata.end())
    throw std::runtime_error("finetune: checkpoint has no config hash");
  if (it->second != want_hash)
    throw std::runtime_error(
        "finetune: checkpoint was trained with an incompatible config (hash " +
        it->second + ", expected " + want_hash + ")");

  ParamStore params = build_model(cfg, cfg.seed);  // head keeps this fresh init
  for (const auto& e : params.entries()) {
    if (e.group == Group::arcface_head) continue;
    bool found = false;
    for (const auto& t : ckpt.tensors) {
      if (t.name != e.name) continue;
      if (t.shape != e.tensor->shape)
        throw std::runtime_error("finetune: shape mismatch for " + t.name);
      e.tensor->v = t.values;
      found = true;
      break;
    }
    if (!found)
      throw std::runtime_error("finetune: checkpoint is missing tensor " + e.name);
  }
  params.set_all_trainable(true);
  params.set_trainable_group(Group::mfn_backbone, false);

  const auto data = expand_dataset(target, cfg, true);
  return run_training(params, cfg, data, "finetune", on_epoch);
}

std::string Report::to_text() const {
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof buf, "macro_accuracy = %.6f\n", macro_accuracy);
  out += buf;
  out += "classes = " + std::to_string(classes) + "\n";
  out += "samples = " + std::to_string(samples) + "\n";
  for (int c = 0; c < classes; ++c) {
    std::snprintf(buf, sizeof buf, "class_%d_accuracy = %.6f\n", c,
                  per_class_accuracy[static_cast<size_t>(c)]);
    out += buf;
  }
  for (int t = 0; t < classes; ++t) {
    out += "confusion_" + std::to_string(t) + " =";
    for (int p = 0; p < classes; ++p) {
      out += ' ';
      out += std::to_string(confusion[static_cast<size_t>(t) * classes + p]);
    }
    out += '\n';
  }
  return out;
}

Report evaluate(const Checkpoint& ckpt, const TrainConfig& cfg,
                const std::vector<SampleRecord>& test) {
  cfg.validate();
  const auto want_hash = checkpoint_metadata(cfg, "", 0).at("config_hash");
  const auto it = ckpt.metadata.find("config_hash");
  if (it == ckpt.metadata.end())
    throw std::runtime_error("evaluate: checkpoint has no config hash");
  if (it->second != want_hash)
    throw std::runtime_error(
        "evaluate: checkpoint/config mismatch (checkpoint hash " + it->second +
        ", requested features hash " + want_hash + ")");

  ParamStore params = build_model(cfg, cfg.seed);
  params_from_checkpoint(ckpt, params);
  auto head = params.get("arcface.w");

  const auto data = expand_dataset(test, cfg, false);
  Report rep;
  rep.confusion.assign(static_cast<size_t>(rep.classes) * rep.classes, 0);
  rep.samples = static_cast<int64_t>(data.size());

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (size_t start = 0; start < order.size(); start += cfg.batch) {
    const size_t stop = std::min(order.size(), start + cfg.batch);
    const std::vector<size_t> batch(order.begin() + start, order.begin() + stop);
    auto emb = embed_batch(nullptr, params, cfg, data, batch, false);
    auto logits = arcface_logits(nullptr, emb, head, {},
                                 ArcFaceConfig{cfg.arc_margin, cfg.arc_scale});
    const int C = logits->dim(1);
    for (size_t b = 0; b < batch.size(); ++b) {
      const float* row = &logits->v[b * static_cast<size_t>(C)];
      const int pred = static_cast<int>(std::max_element(row, row + C) - row);
      const int base_pred = base_from_virtual(pred, cfg.speed_n);
      const int truth = data[batch[b]].base_label;
      ++rep.confusion[static_cast<size_t>(truth) * rep.classes + base_pred];
    }
  }

  rep.per_class_accuracy.assign(static_cast<size_t>(rep.classes), 0.0);
  double acc_sum = 0.0;
  int present = 0;
  for (int c = 0; c < rep.classes; ++c) {
    int64_t row_total = 0;
    for (int p = 0; p < rep.classes; ++p)
      row_total += rep.confusion[static_cast<size_t>(c) * rep.classes + p];
    if (row_total == 0) continue;
    const double acc =
        static_cast<double>(rep.confusion[static_cast<size_t>(c) * rep.classes + c]) /
        static_cast<double>(row_total);
    rep.per_class_accuracy[static_cast<size_t>(c)] = acc;
    acc_sum += acc;
    ++present;
  }
  rep.macro_accuracy = present ? acc_sum / present : 0.0;
  return rep;
}

}  // namespace mavgram
