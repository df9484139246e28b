#pragma once

#include <string>

#include "mavgram/autograd.hpp"
#include "mavgram/features.hpp"
#include "mavgram/params.hpp"
#include "mavgram/waveform.hpp"

namespace mavgram {

// Temporal feature extractor: one large-kernel 1-D conv front end followed by
// block_count blocks of [layer norm over channels, leaky ReLU, 1-D conv].
struct TgramConfig {
  int in_kernel = 1024;
  int in_stride = 512;
  int in_pad = 512;
  int out_channels = 64;
  int block_count = 3;
  int block_kernel = 3;  // odd; blocks are length-preserving (stride 1, pad k/2)
  float leaky_slope = 0.01f;
  double ln_eps = 1e-5;

  int frames_for(int64_t samples) const;
  void validate() const;
};

// Creates the parameter set for one TgramNet under `prefix` ("tgram_a." or
// "tgram_v."), assigned to `group`. Weights are fan-in uniform, biases zero,
// layer-norm gain one / bias zero.
void tgram_build(ParamStore& params, const std::string& prefix, Group group,
                 const TgramConfig& cfg, const Rng& init_rng);

// Graph forward: x is {B, 1, L}; output {B, out_channels, N}.
// Throws if `params` does not hold tensors matching cfg under `prefix`.
nn::TensorPtr tgram_forward(nn::Tape* tape, const ParamStore& params,
                            const std::string& prefix, const nn::TensorPtr& x,
                            const TgramConfig& cfg);

// Convenience single-waveform inference wrapper returning a tagged map.
FeatureMap tgram_feature(const ParamStore& params, const std::string& prefix,
                         const Waveform& x, const TgramConfig& cfg,
                         const std::string& tag);

}  // namespace mavgram
