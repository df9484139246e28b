#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mavgram::nn {

// Dense float32 tensor with an optional gradient slot of the same shape.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;
  std::vector<float> g;  // allocated only while gradients are tracked
  bool requires_grad = false;

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0f);
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);

// Reverse-mode tape. Ops push a closure per node; backward() runs them in
// reverse order. Pass a null tape for pure inference.
class Tape {
 public:
  void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
  void backward() {
    if (nodes_.empty()) throw std::logic_error("backward without a recorded forward");
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    nodes_.clear();
  }
  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

// ---- ops ------------------------------------------------------------------
// Shapes use the {batch, channels, ...} convention. Every op validates its
// input shapes and throws std::invalid_argument on mismatch.

// x {B,Cin,L}, w {Cout,Cin,K}, b {Cout} or null -> {B,Cout,Lout}
TensorPtr conv1d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& b, int stride, int pad);

// x {B,Cin,H,W}, w {Cout,Cin,KH,KW}, b {Cout} or null -> {B,Cout,Ho,Wo}
TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& b, int stride, int pad);

// x {B,C,H,W}, w {C,1,KH,KW} -> {B,C,Ho,Wo}; global pooling when KH=H, KW=W
TensorPtr depthwise_conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                           const TensorPtr& b, int stride, int pad);

// Batch normalization over {B,C,H,W} per channel. In train mode batch
// statistics normalize the activations and, when update_running is set,
// the running estimates advance with the given momentum. Statistics are
// accumulated in double. Running tensors are plain non-trainable tensors.
TensorPtr batch_norm2d(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                       const TensorPtr& beta, const TensorPtr& running_mean,
                       const TensorPtr& running_var, bool train_mode,
                       bool update_running, double momentum = 0.1,
                       double eps = 1e-5);

// Layer normalization across channels at each (batch, frame) of {B,C,T},
// with per-channel gain and bias.
TensorPtr layer_norm_channels(Tape* tape, const TensorPtr& x, const TensorPtr& gain,
                              const TensorPtr& bias, double eps = 1e-5);

// slope {C}: per-channel learnable slope for negative inputs
TensorPtr prelu(Tape* tape, const TensorPtr& x, const TensorPtr& slope);

TensorPtr leaky_relu(Tape* tape, const TensorPtr& x, float slope);

// x {B,In}, w {Out,In}, b {Out} or null -> {B,Out}
TensorPtr linear(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& b);

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);

// {B,Ci,M,N} pieces -> {B,sum(Ci),M,N}
TensorPtr concat_channels(Tape* tape, const std::vector<TensorPtr>& parts);

// {B,C,1,1} -> {B,C}
TensorPtr flatten_spatial(Tape* tape, const TensorPtr& x);

// View with a new shape of identical element count (data copied).
TensorPtr reshape(Tape* tape, const TensorPtr& x, std::vector<int> shape);

}  // namespace mavgram::nn
