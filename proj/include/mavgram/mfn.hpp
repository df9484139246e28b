#pragma once

#include <string>
#include <vector>

#include "mavgram/autograd.hpp"
#include "mavgram/params.hpp"

namespace mavgram {

struct MfnStage {
  int expansion = 2;
  int channels = 64;
  int repeat = 2;
  int stride = 2;  // applied by the first block of the stage
};

// Reduced MobileFaceNet-style classifier: stem conv 3x3/s2 -> depthwise 3x3 ->
// inverted-residual bottleneck stages -> 1x1 conv to head_channels -> global
// depthwise over the remaining extent -> linear to embed_dim. Batch norm after
// every conv; PReLU activations; residuals only at stride-1 equal-channel
// blocks. The final linear is the "last fully connected layer" group.
struct MfnSpec {
  int in_channels = 3;
  int stem_channels = 64;
  std::vector<MfnStage> stages = {{2, 64, 2, 2}, {4, 128, 2, 2}, {4, 128, 2, 2}};
  int head_channels = 512;
  int embed_dim = 128;
  int input_mels = 64;
  int input_frames = 376;

  static MfnSpec canonical(int in_channels);
  static MfnSpec desk(int in_channels);

  void validate() const;
  // Spatial extent {H, W} after the stem and each stage; final entry is the
  // global depthwise kernel size.
  std::vector<std::pair<int, int>> spatial_trace() const;
};

// Creates all "mfn.*" parameters: backbone tensors in mfn_backbone, the
// embedding linear in mfn_last_fc.
void mfn_build(ParamStore& params, const MfnSpec& spec, const Rng& init_rng);

// Forward pass {B, in_channels, mels, frames} -> {B, embed_dim}.
// In train mode each batch-norm layer uses batch statistics and updates its
// running stats only while its own parameters are trainable; frozen layers
// always run from running stats, so a frozen backbone stays bitwise fixed.
nn::TensorPtr mfn_forward(nn::Tape* tape, const ParamStore& params,
                          const MfnSpec& spec, const nn::TensorPtr& x,
                          bool train_mode);

// Total parameter element count implied by the spec (documented invariant).
int64_t mfn_param_count(const MfnSpec& spec);

}  // namespace mavgram
