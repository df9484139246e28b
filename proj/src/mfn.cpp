#include "mavgram/mfn.hpp"

#include <stdexcept>

namespace mavgram {

MfnSpec MfnSpec::canonical(int in_channels) {
  MfnSpec s;
  s.in_channels = in_channels;
  return s;
}

MfnSpec MfnSpec::desk(int in_channels) {
  MfnSpec s;
  s.in_channels = in_channels;
  s.stem_channels = 32;
  s.stages = {{2, 32, 2, 2}, {4, 64, 2, 2}, {4, 64, 2, 2}};
  s.head_channels = 256;
  s.embed_dim = 64;
  s.input_mels = 32;
  s.input_frames = 63;
  return s;
}

void MfnSpec::validate() const {
  if (in_channels < 1) throw std::invalid_argument("mfn: bad input channels");
  if (stem_channels < 1 || head_channels < 1 || embed_dim < 1)
    throw std::invalid_argument("mfn: bad channel counts");
  if (stages.empty()) throw std::invalid_argument("mfn: no stages");
  for (const auto& st : stages)
    if (st.expansion < 1 || st.channels < 1 || st.repeat < 1 || st.stride < 1)
      throw std::invalid_argument("mfn: bad stage");
  if (input_mels < 1 || input_frames < 1)
    throw std::invalid_argument("mfn: bad input extent");
  auto trace = spatial_trace();
  if (trace.back().first < 1 || trace.back().second < 1)
    throw std::invalid_argument("mfn: input too small for stage strides");
}

namespace {

int conv_out(int n, int k, int stride, int pad) {
  const int num = n + 2 * pad - k;
  if (num < 0) throw std::invalid_argument("mfn: extent smaller than kernel");
  return num / stride + 1;
}

struct BnNames {
  std::string gamma, beta, rmean, rvar;
};

BnNames bn_names(const std::string& prefix) {
  return {prefix + ".bn.gamma", prefix + ".bn.beta", prefix + ".bn.rmean",
          prefix + ".bn.rvar"};
}

void add_bn(ParamStore& params, const std::string& prefix, Group group, int ch) {
  auto n = bn_names(prefix);
  fill_constant(params.add(n.gamma, group, {ch}), 1.0f);
  fill_constant(params.add(n.beta, group, {ch}), 0.0f);
  fill_constant(params.add(n.rmean, group, {ch}, false), 0.0f);
  fill_constant(params.add(n.rvar, group, {ch}, false), 1.0f);
}

void add_conv_bn_prelu(ParamStore& params, const std::string& prefix, Group group,
                       int cin, int cout, int kh, int kw, const Rng& rng,
                       bool with_prelu) {
  auto w = params.add(prefix + ".conv.w", group, {cout, cin, kh, kw});
  init_conv_weight(w, rng, prefix + ".conv.w");
  add_bn(params, prefix, group, cout);
  if (with_prelu)
    fill_constant(params.add(prefix + ".prelu", group, {cout}), 0.25f);
}

void add_dwconv_bn_prelu(ParamStore& params, const std::string& prefix, Group group,
                         int ch, int kh, int kw, const Rng& rng, bool with_prelu) {
  auto w = params.add(prefix + ".conv.w", group, {ch, 1, kh, kw});
  init_conv_weight(w, rng, prefix + ".conv.w");
  add_bn(params, prefix, group, ch);
  if (with_prelu)
    fill_constant(params.add(prefix + ".prelu", group, {ch}), 0.25f);
}

// Shared forward helper: conv -> bn -> optional prelu. Frozen BN layers run
// from running statistics regardless of train_mode and never update them.
nn::TensorPtr bn_apply(nn::Tape* tape, const ParamStore& params,
                       const std::string& prefix, const nn::TensorPtr& h,
                       bool train_mode) {
  auto n = bn_names(prefix);
  auto gamma = params.get(n.gamma);
  const bool live = train_mode && gamma->requires_grad;
  return nn::batch_norm2d(tape, h, gamma, params.get(n.beta), params.get(n.rmean),
                          params.get(n.rvar), live, live);
}

nn::TensorPtr conv_bn_prelu(nn::Tape* tape, const ParamStore& params,
                            const std::string& prefix, const nn::TensorPtr& x,
                            int stride, int pad, bool train_mode, bool with_prelu,
                            bool depthwise) {
  auto w = params.get(prefix + ".conv.w");
  auto h = depthwise ? nn::depthwise_conv2d(tape, x, w, nullptr, stride, pad)
                     : nn::conv2d(tape, x, w, nullptr, stride, pad);
  h = bn_apply(tape, params, prefix, h, train_mode);
  if (with_prelu) h = nn::prelu(tape, h, params.get(prefix + ".prelu"));
  return h;
}

std::string stage_prefix(int s, int b) {
  return "mfn.stage" + std::to_string(s) + ".block" + std::to_string(b);
}

}  // namespace

std::vector<std::pair<int, int>> MfnSpec::spatial_trace() const {
  std::vector<std::pair<int, int>> trace;
  int h = conv_out(input_mels, 3, 2, 1);
  int w = conv_out(input_frames, 3, 2, 1);
  trace.emplace_back(h, w);  // after stem (depthwise conv preserves extent)
  for (const auto& st : stages) {
    h = conv_out(h, 3, st.stride, 1);
    w = conv_out(w, 3, st.stride, 1);
    trace.emplace_back(h, w);
  }
  return trace;
}

void mfn_build(ParamStore& params, const MfnSpec& spec, const Rng& init_rng) {
  spec.validate();
  const Group bk = Group::mfn_backbone;
  add_conv_bn_prelu(params, "mfn.stem", bk, spec.in_channels, spec.stem_channels, 3,
                    3, init_rng, true);
  add_dwconv_bn_prelu(params, "mfn.dw", bk, spec.stem_channels, 3, 3, init_rng, true);

  int cin = spec.stem_channels;
  for (size_t s = 0; s < spec.stages.size(); ++s) {
    const auto& st = spec.stages[s];
    for (int b = 0; b < st.repeat; ++b) {
      const std::string p = stage_prefix(static_cast<int>(s), b);
      const int mid = cin * st.expansion;
      add_conv_bn_prelu(params, p + ".expand", bk, cin, mid, 1, 1, init_rng, true);
      add_dwconv_bn_prelu(params, p + ".dw", bk, mid, 3, 3, init_rng, true);
      add_conv_bn_prelu(params, p + ".project", bk, mid, st.channels, 1, 1, init_rng,
                        false);
      cin = st.channels;
    }
  }
  add_conv_bn_prelu(params, "mfn.head", bk, cin, spec.head_channels, 1, 1, init_rng,
                    true);
  auto trace = spec.spatial_trace();
  add_dwconv_bn_prelu(params, "mfn.gdw", bk, spec.head_channels, trace.back().first,
                      trace.back().second, init_rng, false);

  auto ew = params.add("mfn.embed.w", Group::mfn_last_fc,
                       {spec.embed_dim, spec.head_channels});
  init_linear_weight(ew, init_rng, "mfn.embed.w");
  fill_constant(params.add("mfn.embed.b", Group::mfn_last_fc, {spec.embed_dim}),
                0.0f);
}

nn::TensorPtr mfn_forward(nn::Tape* tape, const ParamStore& params,
                          const MfnSpec& spec, const nn::TensorPtr& x,
                          bool train_mode) {
  spec.validate();
  if (x->shape.size() != 4 || x->dim(1) != spec.in_channels ||
      x->dim(2) != spec.input_mels || x->dim(3) != spec.input_frames)
    throw std::invalid_argument("mfn: input shape does not match spec");

  auto h = conv_bn_prelu(tape, params, "mfn.stem", x, 2, 1, train_mode, true, false);
  h = conv_bn_prelu(tape, params, "mfn.dw", h, 1, 1, train_mode, true, true);

  int cin = spec.stem_channels;
  for (size_t s = 0; s < spec.stages.size(); ++s) {
    const auto& st = spec.stages[s];
    for (int b = 0; b < st.repeat; ++b) {
      const std::string p = stage_prefix(static_cast<int>(s), b);
      const int stride = (b == 0) ? st.stride : 1;
      auto in = h;
      h = conv_bn_prelu(tape, params, p + ".expand", h, 1, 0, train_mode, true,
                        false);
      h = conv_bn_prelu(tape, params, p + ".dw", h, stride, 1, train_mode, true,
                        true);
      h = conv_bn_prelu(tape, params, p + ".project", h, 1, 0, train_mode, false,
                        false);
      if (stride == 1 && cin == st.channels) h = nn::add(tape, in, h);
      cin = st.channels;
    }
  }
  h = conv_bn_prelu(tape, params, "mfn.head", h, 1, 0, train_mode, true, false);
  h = conv_bn_prelu(tape, params, "mfn.gdw", h, 1, 0, train_mode, false, true);
  auto flat = nn::flatten_spatial(tape, h);
  return nn::linear(tape, flat, params.get("mfn.embed.w"), params.get("mfn.embed.b"));
}

int64_t mfn_param_count(const MfnSpec& spec) {
  ParamStore tmp;
  mfn_build(tmp, spec, Rng(0));
  int64_t n = 0;
  for (const auto& e : tmp.entries()) n += e.tensor->numel();
  return n;
}

}  // namespace mavgram
