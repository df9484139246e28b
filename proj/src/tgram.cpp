#include "mavgram/tgram.hpp"

#include <stdexcept>

namespace mavgram {

int TgramConfig::frames_for(int64_t samples) const {
  const int64_t num = samples + 2LL * in_pad - in_kernel;
  if (num < 0) throw std::invalid_argument("tgram: input shorter than kernel");
  return static_cast<int>(num / in_stride) + 1;
}

void TgramConfig::validate() const {
  if (in_kernel <= 0 || in_stride <= 0 || in_pad < 0)
    throw std::invalid_argument("tgram: bad front conv geometry");
  if (out_channels <= 0) throw std::invalid_argument("tgram: bad channel count");
  if (block_count < 0) throw std::invalid_argument("tgram: bad block count");
  if (block_kernel <= 0 || block_kernel % 2 == 0)
    throw std::invalid_argument("tgram: block kernel must be odd positive");
}

namespace {

std::string front_w(const std::string& p) { return p + "front.w"; }
std::string front_b(const std::string& p) { return p + "front.b"; }
std::string blk(const std::string& p, int i, const char* leaf) {
  return p + "block" + std::to_string(i) + "." + leaf;
}

}  // namespace

void tgram_build(ParamStore& params, const std::string& prefix, Group group,
                 const TgramConfig& cfg, const Rng& init_rng) {
  cfg.validate();
  const int C = cfg.out_channels;
  auto fw = params.add(front_w(prefix), group, {C, 1, cfg.in_kernel});
  init_conv_weight(fw, init_rng, front_w(prefix));
  fill_constant(params.add(front_b(prefix), group, {C}), 0.0f);
  for (int i = 0; i < cfg.block_count; ++i) {
    fill_constant(params.add(blk(prefix, i, "ln.gain"), group, {C}), 1.0f);
    fill_constant(params.add(blk(prefix, i, "ln.bias"), group, {C}), 0.0f);
    auto w = params.add(blk(prefix, i, "conv.w"), group, {C, C, cfg.block_kernel});
    init_conv_weight(w, init_rng, blk(prefix, i, "conv.w"));
    fill_constant(params.add(blk(prefix, i, "conv.b"), group, {C}), 0.0f);
  }
}

nn::TensorPtr tgram_forward(nn::Tape* tape, const ParamStore& params,
                            const std::string& prefix, const nn::TensorPtr& x,
                            const TgramConfig& cfg) {
  cfg.validate();
  if (x->shape.size() != 3 || x->dim(1) != 1)
    throw std::invalid_argument("tgram: input must be {B,1,L}");
  auto fw = params.get(front_w(prefix));
  if (fw->dim(0) != cfg.out_channels || fw->dim(2) != cfg.in_kernel)
    throw std::invalid_argument("tgram: params do not match config");
  auto h = nn::conv1d(tape, x, fw, params.get(front_b(prefix)), cfg.in_stride,
                      cfg.in_pad);
  for (int i = 0; i < cfg.block_count; ++i) {
    h = nn::layer_norm_channels(tape, h, params.get(blk(prefix, i, "ln.gain")),
                                params.get(blk(prefix, i, "ln.bias")), cfg.ln_eps);
    h = nn::leaky_relu(tape, h, cfg.leaky_slope);
    auto w = params.get(blk(prefix, i, "conv.w"));
    if (w->dim(2) != cfg.block_kernel)
      throw std::invalid_argument("tgram: params do not match config");
    h = nn::conv1d(tape, h, w, params.get(blk(prefix, i, "conv.b")), 1,
                   cfg.block_kernel / 2);
  }
  return h;
}

FeatureMap tgram_feature(const ParamStore& params, const std::string& prefix,
                         const Waveform& x, const TgramConfig& cfg,
                         const std::string& tag) {
  validate(x);
  auto in = nn::make_tensor({1, 1, static_cast<int>(x.samples.size())}, false);
  std::copy(x.samples.begin(), x.samples.end(), in->v.begin());
  auto out = tgram_forward(nullptr, params, prefix, in, cfg);
  FeatureMap fm;
  fm.channels = 1;
  fm.mels = out->dim(1);
  fm.frames = out->dim(2);
  fm.data = out->v;
  fm.channel_tags = {tag};
  return fm;
}

}  // namespace mavgram
