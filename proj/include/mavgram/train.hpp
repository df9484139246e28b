#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mavgram/arcface.hpp"
#include "mavgram/checkpoint.hpp"
#include "mavgram/config.hpp"
#include "mavgram/manifest.hpp"
#include "mavgram/params.hpp"

namespace mavgram {

inline constexpr int kBaseClasses = 5;

// A sample pair after canonicalization: both streams at features.rate with
// exactly features.samples() samples, min-max normalized.
struct LoadedSample {
  int label = 0;
  Waveform acoustic;
  Waveform vibration;
};

LoadedSample load_and_canonicalize(const SampleRecord& rec,
                                   const FeatureProfile& features);

// One speed-perturbed training instance with its cached log-mel map.
struct ExpandedSample {
  int base_label = 0;
  int speed_index = 0;
  int virtual_target = 0;
  std::vector<float> acoustic;   // only filled when the variant needs Agram
  std::vector<float> vibration;  // only filled when the variant needs Vgram
  std::vector<float> mgram;      // mels*frames, only when the variant needs it
};

// Expands records over the speed grid (or just factor 1 when perturb=false)
// and precomputes everything that does not depend on trainable parameters.
std::vector<ExpandedSample> expand_dataset(const std::vector<SampleRecord>& records,
                                           const TrainConfig& cfg, bool perturb);

// Model parameters for a config: TgramNets for the channels the variant uses,
// the MFN, and an ArcFace head with base_classes * speed_n rows.
ParamStore build_model(const TrainConfig& cfg, uint64_t init_seed);

// Embeddings for a batch of expanded samples (indices into `data`).
nn::TensorPtr embed_batch(nn::Tape* tape, const ParamStore& params,
                          const TrainConfig& cfg,
                          const std::vector<ExpandedSample>& data,
                          const std::vector<size_t>& batch, bool train_mode);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;  // base-class accuracy on the training batches
};

using EpochCallback = std::function<void(const EpochStats&)>;

struct TrainResult {
  Checkpoint best;  // lowest-train-loss snapshot
  std::vector<EpochStats> log;
};

// Stage one: all groups trainable from fresh init.
TrainResult pretrain(const TrainConfig& cfg, const std::vector<SampleRecord>& source,
                     const EpochCallback& on_epoch = nullptr);

// Stage two: backbone values carried over from `ckpt` and frozen bitwise
// (including batch-norm running statistics); TgramNets and the embedding
// linear continue training; the ArcFace head restarts from cfg.seed.
TrainResult finetune(const Checkpoint& ckpt, const TrainConfig& cfg,
                     const std::vector<SampleRecord>& target,
                     const EpochCallback& on_epoch = nullptr);

struct Report {
  int classes = kBaseClasses;
  int64_t samples = 0;
  std::vector<int64_t> confusion;  // classes x classes, row = true label
  std::vector<double> per_class_accuracy;
  double macro_accuracy = 0.0;

  std::string to_text() const;
};

// Eval-mode forward on unperturbed samples; prediction = argmax cosine logit
// collapsed to its base class. Rejects checkpoints whose config hash does
// not match cfg (wrong variant or geometry).
Report evaluate(const Checkpoint& ckpt, const TrainConfig& cfg,
                const std::vector<SampleRecord>& test);

// Shared metadata block for checkpoints produced by this pipeline.
std::map<std::string, std::string> checkpoint_metadata(const TrainConfig& cfg,
                                                       const std::string& stage,
                                                       int best_epoch);

}  // namespace mavgram
