#include "mavgram/autograd.hpp"

#include <cmath>
#include <stdexcept>

namespace mavgram::nn {

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  for (int d : t->shape)
    if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
  t->v.assign(static_cast<size_t>(t->numel()), 0.0f);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

int out_extent(int in, int k, int stride, int pad) {
  const int num = in + 2 * pad - k;
  require(num >= 0, "conv: kernel larger than padded input");
  return num / stride + 1;
}

bool track(const Tape* tape, std::initializer_list<const TensorPtr*> ins) {
  if (!tape) return false;
  for (const auto* p : ins)
    if (*p && (*p)->requires_grad) return true;
  return false;
}

TensorPtr out_like(std::vector<int> shape, bool tracked) {
  return make_tensor(std::move(shape), tracked);
}

}  // namespace

TensorPtr conv1d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& b, int stride, int pad) {
  require(x->shape.size() == 3, "conv1d: input must be {B,Cin,L}");
  require(w->shape.size() == 3, "conv1d: weight must be {Cout,Cin,K}");
  require(x->dim(1) == w->dim(1), "conv1d: channel mismatch");
  const int B = x->dim(0), Cin = x->dim(1), L = x->dim(2);
  const int Cout = w->dim(0), K = w->dim(2);
  if (b) require(b->shape.size() == 1 && b->dim(0) == Cout, "conv1d: bad bias shape");
  require(stride > 0 && pad >= 0, "conv1d: bad stride/pad");
  const int Lo = out_extent(L, K, stride, pad);

  const bool tracked = track(tape, {&x, &w, &b});
  auto y = out_like({B, Cout, Lo}, tracked);

  auto run = [=](bool backward) {
    for (int bi = 0; bi < B; ++bi) {
      for (int co = 0; co < Cout; ++co) {
        float* yrow = &y->v[(static_cast<size_t>(bi) * Cout + co) * Lo];
        const float* grow =
            backward ? &y->g[(static_cast<size_t>(bi) * Cout + co) * Lo] : nullptr;
        if (!backward && b) {
          for (int t = 0; t < Lo; ++t) yrow[t] = b->v[static_cast<size_t>(co)];
        }
        if (backward && b && b->requires_grad) {
          double acc = 0.0;
          for (int t = 0; t < Lo; ++t) acc += grow[t];
          b->g[static_cast<size_t>(co)] += static_cast<float>(acc);
        }
        for (int ci = 0; ci < Cin; ++ci) {
          const float* xrow = &x->v[(static_cast<size_t>(bi) * Cin + ci) * L];
          float* xg = (backward && x->requires_grad)
                          ? &x->g[(static_cast<size_t>(bi) * Cin + ci) * L]
                          : nullptr;
          for (int k = 0; k < K; ++k) {
            const size_t widx = (static_cast<size_t>(co) * Cin + ci) * K + k;
            const float wv = w->v[widx];
            if (!backward) {
              for (int t = 0; t < Lo; ++t) {
                const int src = t * stride - pad + k;
                if (src >= 0 && src < L) yrow[t] += wv * xrow[src];
              }
            } else {
              double wacc = 0.0;
              for (int t = 0; t < Lo; ++t) {
                const int src = t * stride - pad + k;
                if (src < 0 || src >= L) continue;
                const float gy = grow[t];
                wacc += static_cast<double>(gy) * xrow[src];
                if (xg) xg[src] += wv * gy;
              }
              if (w->requires_grad) w->g[widx] += static_cast<float>(wacc);
            }
          }
        }
      }
    }
  };
  run(false);
  if (tracked) tape->record([run]() { run(true); });
  return y;
}

TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& b, int stride, int pad) {
  require(x->shape.size() == 4, "conv2d: input must be {B,Cin,H,W}");
  require(w->shape.size() == 4, "conv2d: weight must be {Cout,Cin,KH,KW}");
  require(x->dim(1) == w->dim(1), "conv2d: channel mismatch");
  const int B = x->dim(0), Cin = x->dim(1), H = x->dim(2), W = x->dim(3);
  const int Cout = w->dim(0), KH = w->dim(2), KW = w->dim(3);
  if (b) require(b->shape.size() == 1 && b->dim(0) == Cout, "conv2d: bad bias shape");
  require(stride > 0 && pad >= 0, "conv2d: bad stride/pad");
  const int Ho = out_extent(H, KH, stride, pad);
  const int Wo = out_extent(W, KW, stride, pad);

  const bool tracked = track(tape, {&x, &w, &b});
  auto y = out_like({B, Cout, Ho, Wo}, tracked);

  auto run = [=](bool backward) {
    for (int bi = 0; bi < B; ++bi) {
      for (int co = 0; co < Cout; ++co) {
        float* yp = &y->v[((static_cast<size_t>(bi) * Cout + co) * Ho) * Wo];
        const float* gp =
            backward ? &y->g[((static_cast<size_t>(bi) * Cout + co) * Ho) * Wo] : nullptr;
        if (!backward) {
          const float bv = b ? b->v[static_cast<size_t>(co)] : 0.0f;
          for (int i = 0; i < Ho * Wo; ++i) yp[i] = bv;
        } else if (b && b->requires_grad) {
          double acc = 0.0;
          for (int i = 0; i < Ho * Wo; ++i) acc += gp[i];
          b->g[static_cast<size_t>(co)] += static_cast<float>(acc);
        }
        for (int ci = 0; ci < Cin; ++ci) {
          const float* xp = &x->v[((static_cast<size_t>(bi) * Cin + ci) * H) * W];
          float* xg = (backward && x->requires_grad)
                          ? &x->g[((static_cast<size_t>(bi) * Cin + ci) * H) * W]
                          : nullptr;
          for (int kh = 0; kh < KH; ++kh) {
            for (int kw = 0; kw < KW; ++kw) {
              const size_t widx =
                  ((static_cast<size_t>(co) * Cin + ci) * KH + kh) * KW + kw;
              const float wv = w->v[widx];
              double wacc = 0.0;
              for (int ho = 0; ho < Ho; ++ho) {
                const int hi = ho * stride - pad + kh;
                if (hi < 0 || hi >= H) continue;
                const float* xrow = xp + static_cast<size_t>(hi) * W;
                if (!backward) {
                  float* yrow = yp + static_cast<size_t>(ho) * Wo;
                  for (int wo = 0; wo < Wo; ++wo) {
                    const int wi = wo * stride - pad + kw;
                    if (wi >= 0 && wi < W) yrow[wo] += wv * xrow[wi];
                  }
                } else {
                  const float* grow = gp + static_cast<size_t>(ho) * Wo;
                  float* xgrow = xg ? xg + static_cast<size_t>(hi) * W : nullptr;
                  for (int wo = 0; wo < Wo; ++wo) {
                    const int wi = wo * stride - pad + kw;
                    if (wi < 0 || wi >= W) continue;
                    const float gy = grow[wo];
                    wacc += static_cast<double>(gy) * xrow[wi];
                    if (xgrow) xgrow[wi] += wv * gy;
                  }
                }
              }
              if (backward && w->requires_grad) w->g[widx] += static_cast<float>(wacc);
            }
          }
        }
      }
    }
  };
  run(false);
  if (tracked) tape->record([run]() { run(true); });
  return y;
}

TensorPtr depthwise_conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                           const TensorPtr& b, int stride, int pad) {
  require(x->shape.size() == 4, "dwconv: input must be {B,C,H,W}");
  require(w->shape.size() == 4 && w->dim(1) == 1, "dwconv: weight must be {C,1,KH,KW}");
  require(x->dim(1) == w->dim(0), "dwconv: channel mismatch");
  const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
  const int KH = w->dim(2), KW = w->dim(3);
  if (b) require(b->shape.size() == 1 && b->dim(0) == C, "dwconv: bad bias shape");
  require(stride > 0 && pad >= 0, "dwconv: bad stride/pad");
  const int Ho = out_extent(H, KH, stride, pad);
  const int Wo = out_extent(W, KW, stride, pad);

  const bool tracked = track(tape, {&x, &w, &b});
  auto y = out_like({B, C, Ho, Wo}, tracked);

  auto run = [=](bool backward) {
    for (int bi = 0; bi < B; ++bi) {
      for (int c = 0; c < C; ++c) {
        float* yp = &y->v[((static_cast<size_t>(bi) * C + c) * Ho) * Wo];
        const float* gp =
            backward ? &y->g[((static_cast<size_t>(bi) * C + c) * Ho) * Wo] : nullptr;
        const float* xp = &x->v[((static_cast<size_t>(bi) * C + c) * H) * W];
        float* xg = (backward && x->requires_grad)
                        ? &x->g[((static_cast<size_t>(bi) * C + c) * H) * W]
                        : nullptr;
        if (!backward) {
          const float bv = b ? b->v[static_cast<size_t>(c)] : 0.0f;
          for (int i = 0; i < Ho * Wo; ++i) yp[i] = bv;
        } else if (b && b->requires_grad) {
          double acc = 0.0;
          for (int i = 0; i < Ho * Wo; ++i) acc += gp[i];
          b->g[static_cast<size_t>(c)] += static_cast<float>(acc);
        }
        for (int kh = 0; kh < KH; ++kh) {
          for (int kw = 0; kw < KW; ++kw) {
            const size_t widx = (static_cast<size_t>(c) * KH + kh) * KW + kw;
            const float wv = w->v[widx];
            double wacc = 0.0;
            for (int ho = 0; ho < Ho; ++ho) {
              const int hi = ho * stride - pad + kh;
              if (hi < 0 || hi >= H) continue;
              const float* xrow = xp + static_cast<size_t>(hi) * W;
              if (!backward) {
                float* yrow = yp + static_cast<size_t>(ho) * Wo;
                for (int wo = 0; wo < Wo; ++wo) {
                  const int wi = wo * stride - pad + kw;
                  if (wi >= 0 && wi < W) yrow[wo] += wv * xrow[wi];
                }
              } else {
                const float* grow = gp + static_cast<size_t>(ho) * Wo;
                float* xgrow = xg ? xg + static_cast<size_t>(hi) * W : nullptr;
                for (int wo = 0; wo < Wo; ++wo) {
                  const int wi = wo * stride - pad + kw;
                  if (wi < 0 || wi >= W) continue;
                  const float gy = grow[wo];
                  wacc += static_cast<double>(gy) * xrow[wi];
                  if (xgrow) xgrow[wi] += wv * gy;
                }
              }
            }
            if (backward && w->requires_grad) w->g[widx] += static_cast<float>(wacc);
          }
        }
      }
    }
  };
  run(false);
  if (tracked) tape->record([run]() { run(true); });
  return y;
}

TensorPtr batch_norm2d(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                       const TensorPtr& beta, const TensorPtr& running_mean,
                       const TensorPtr& running_var, bool train_mode,
                       bool update_running, double momentum, double eps) {
  require(x->shape.size() == 4, "batch_norm2d: input must be {B,C,H,W}");
  const int B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
  require(gamma->shape.size() == 1 && gamma->dim(0) == C, "batch_norm2d: bad gamma");
  require(beta->shape.size() == 1 && beta->dim(0) == C, "batch_norm2d: bad beta");
  require(running_mean->dim(0) == C && running_var->dim(0) == C,
          "batch_norm2d: bad running stats");
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t count = static_cast<int64_t>(B) * plane;

  // per-channel statistics for this forward pass
  auto mean = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    double mu, var;
    if (train_mode) {
      double s = 0.0, s2 = 0.0;
      for (int bi = 0; bi < B; ++bi) {
        const float* xp = &x->v[((static_cast<size_t>(bi) * C + c) * H) * W];
        for (int64_t i = 0; i < plane; ++i) {
          const double xv = xp[i];
          s += xv;
          s2 += xv * xv;
        }
      }
      mu = s / static_cast<double>(count);
      var = std::max(0.0, s2 / static_cast<double>(count) - mu * mu);
      if (update_running) {
        running_mean->v[static_cast<size_t>(c)] = static_cast<float>(
            (1.0 - momentum) * running_mean->v[static_cast<size_t>(c)] + momentum * mu);
        running_var->v[static_cast<size_t>(c)] = static_cast<float>(
            (1.0 - momentum) * running_var->v[static_cast<size_t>(c)] + momentum * var);
      }
    } else {
      mu = running_mean->v[static_cast<size_t>(c)];
      var = running_var->v[static_cast<size_t>(c)];
    }
    (*mean)[static_cast<size_t>(c)] = mu;
    (*inv_std)[static_cast<size_t>(c)] = 1.0 / std::sqrt(var + eps);
  }

  const bool tracked = track(tape, {&x, &gamma, &beta});
  auto y = out_like(x->shape, tracked);
  for (int bi = 0; bi < B; ++bi) {
    for (int c = 0; c < C; ++c) {
      const float* xp = &x->v[((static_cast<size_t>(bi) * C + c) * H) * W];
      float* yp = &y->v[((static_cast<size_t>(bi) * C + c) * H) * W];
      const double mu = (*mean)[static_cast<size_t>(c)];
      const double is = (*inv_std)[static_cast<size_t>(c)];
      const double gv = gamma->v[static_cast<size_t>(c)];
      const double bv = beta->v[static_cast<size_t>(c)];
      for (int64_t i = 0; i < plane; ++i)
        yp[i] = static_cast<float>((xp[i] - mu) * is * gv + bv);
    }
  }

  if (tracked) {
    tape->record([=]() {
      for (int c = 0; c < C; ++c) {
        const double mu = (*mean)[static_cast<size_t>(c)];
        const double is = (*inv_std)[static_cast<size_t>(c)];
        const double gv = gamma->v[static_cast<size_t>(c)];
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int bi = 0; bi < B; ++bi) {
          const float* xp = &x->v[((static_cast<size_t>(bi) * C + c) * H) * W];
          const float* gp = &y->g[((static_cast<size_t>(bi) * C + c) * H) * W];
          for (int64_t i = 0; i < plane; ++i) {
            const double xhat = (xp[i] - mu) * is;
            sum_gy += gp[i];
            sum_gy_xhat += static_cast<double>(gp[i]) * xhat;
          }
        }
        if (beta->requires_grad)
          beta->g[static_cast<size_t>(c)] += static_cast<float>(sum_gy);
        if (gamma->requires_grad)
          gamma->g[static_cast<size_t>(c)] += static_cast<float>(sum_gy_xhat);
        if (!x->requires_grad) continue;
        const double n = static_cast<double>(count);
        for (int bi = 0; bi < B; ++bi) {
          const float* xp = &x->v[((static_cast<size_t>(bi) * C + c) * H) * W];
          const float* gp = &y->g[((static_cast<size_t>(bi) * C + c) * H) * W];
          float* xg = &x->g[((static_cast<size_t>(bi) * C + c) * H) * W];
          for (int64_t i = 0; i < plane; ++i) {
            const double xhat = (xp[i] - mu) * is;
            double dx;
            if (train_mode) {
              dx = gv * is * (gp[i] - sum_gy / n - xhat * sum_gy_xhat / n);
            } else {
              dx = gv * is * gp[i];
            }
            xg[i] += static_cast<float>(dx);
          }
        }
      }
    });
  }
  return y;
}

TensorPtr layer_norm_channels(Tape* tape, const TensorPtr& x, const TensorPtr& gain,
                              const TensorPtr& bias, double eps) {
  require(x->shape.size() == 3, "layer_norm: input must be {B,C,T}");
  const int B = x->dim(0), C = x->dim(1), T = x->dim(2);
  require(gain->dim(0) == C && bias->dim(0) == C, "layer_norm: bad gain/bias");

  const bool tracked = track(tape, {&x, &gain, &bias});
  auto y = out_like(x->shape, tracked);
  auto mean = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * T);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * T);

  for (int bi = 0; bi < B; ++bi) {
    for (int t = 0; t < T; ++t) {
      double s = 0.0, s2 = 0.0;
      for (int c = 0; c < C; ++c) {
        const double xv = x->v[(static_cast<size_t>(bi) * C + c) * T + t];
        s += xv;
        s2 += xv * xv;
      }
      const double mu = s / C;
      const double var = std::max(0.0, s2 / C - mu * mu);
      const double is = 1.0 / std::sqrt(var + eps);
      (*mean)[static_cast<size_t>(bi) * T + t] = mu;
      (*inv_std)[static_cast<size_t>(bi) * T + t] = is;
      for (int c = 0; c < C; ++c) {
        const size_t idx = (static_cast<size_t>(bi) * C + c) * T + t;
        y->v[idx] = static_cast<float>((x->v[idx] - mu) * is * gain->v[static_cast<size_t>(c)] +
                                       bias->v[static_cast<size_t>(c)]);
      }
    }
  }

  if (tracked) {
    tape->record([=]() {
      for (int bi = 0; bi < B; ++bi) {
        for (int t = 0; t < T; ++t) {
          const double mu = (*mean)[static_cast<size_t>(bi) * T + t];
          const double is = (*inv_std)[static_cast<size_t>(bi) * T + t];
          double sum_h = 0.0, sum_h_xhat = 0.0;
          for (int c = 0; c < C; ++c) {
            const size_t idx = (static_cast<size_t>(bi) * C + c) * T + t;
            const double xhat = (x->v[idx] - mu) * is;
            const double h = static_cast<double>(y->g[idx]) * gain->v[static_cast<size_t>(c)];
            sum_h += h;
            sum_h_xhat += h * xhat;
            if (gain->requires_grad)
              gain->g[static_cast<size_t>(c)] += static_cast<float>(y->g[idx] * xhat);
            if (bias->requires_grad) bias->g[static_cast<size_t>(c)] += y->g[idx];
          }
          if (!x->requires_grad) continue;
          for (int c = 0; c < C; ++c) {
            const size_t idx = (static_cast<size_t>(bi) * C + c) * T + t;
            const double xhat = (x->v[idx] - mu) * is;
            const double h = static_cast<double>(y->g[idx]) * gain->v[static_cast<size_t>(c)];
            x->g[idx] += static_cast<float>(is * (h - sum_h / C - xhat * sum_h_xhat / C));
          }
        }
      }
    });
  }
  return y;
}

TensorPtr prelu(Tape* tape, const TensorPtr& x, const TensorPtr& slope) {
  require(x->shape.size() >= 2, "prelu: input must be {B,C,...}");
  const int B = x->dim(0), C = x->dim(1);
  require(slope->shape.size() == 1 && slope->dim(0) == C, "prelu: bad slope shape");
  const int64_t inner = x->numel() / (static_cast<int64_t>(B) * C);

  const bool tracked = track(tape, {&x, &slope});
  auto y = out_like(x->shape, tracked);
  for (int bi = 0; bi < B; ++bi) {
    for (int c = 0; c < C; ++c) {
      const float a = slope->v[static_cast<size_t>(c)];
      const size_t base = (static_cast<size_t>(bi) * C + c) * static_cast<size_t>(inner);
      for (int64_t i = 0; i < inner; ++i) {
        const float xv = x->v[base + static_cast<size_t>(i)];
        y->v[base + static_cast<size_t>(i)] = xv > 0.0f ? xv : a * xv;
      }
    }
  }
  if (tracked) {
    tape->record([=]() {
      for (int bi = 0; bi < B; ++bi) {
        for (int c = 0; c < C; ++c) {
          const float a = slope->v[static_cast<size_t>(c)];
          const size_t base = (static_cast<size_t>(bi) * C + c) * static_cast<size_t>(inner);
          double sacc = 0.0;
          for (int64_t i = 0; i < inner; ++i) {
            const float xv = x->v[base + static_cast<size_t>(i)];
            const float gy = y->g[base + static_cast<size_t>(i)];
            if (x->requires_grad)
              x->g[base + static_cast<size_t>(i)] += xv > 0.0f ? gy : a * gy;
            if (xv <= 0.0f) sacc += static_cast<double>(gy) * xv;
          }
          if (slope->requires_grad)
            slope->g[static_cast<size_t>(c)] += static_cast<float>(sacc);
        }
      }
    });
  }
  return y;
}

TensorPtr leaky_relu(Tape* tape, const TensorPtr& x, float slope) {
  const bool tracked = track(tape, {&x});
  auto y = out_like(x->shape, tracked);
  const size_t n = x->v.size();
  for (size_t i = 0; i < n; ++i) {
    const float xv = x->v[i];
    y->v[i] = xv > 0.0f ? xv : slope * xv;
  }
  if (tracked) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      for (size_t i = 0; i < n; ++i)
        x->g[i] += x->v[i] > 0.0f ? y->g[i] : slope * y->g[i];
    });
  }
  return y;
}

TensorPtr linear(Tape* tape, const TensorPtr& x, const TensorPtr& w,
                 const TensorPtr& b) {
  require(x->shape.size() == 2, "linear: input must be {B,In}");
  require(w->shape.size() == 2 && w->dim(1) == x->dim(1), "linear: weight mismatch");
  const int B = x->dim(0), In = x->dim(1), Out = w->dim(0);
  if (b) require(b->shape.size() == 1 && b->dim(0) == Out, "linear: bad bias shape");

  const bool tracked = track(tape, {&x, &w, &b});
  auto y = out_like({B, Out}, tracked);
  for (int bi = 0; bi < B; ++bi) {
    const float* xrow = &x->v[static_cast<size_t>(bi) * In];
    for (int o = 0; o < Out; ++o) {
      const float* wrow = &w->v[static_cast<size_t>(o) * In];
      double acc = b ? b->v[static_cast<size_t>(o)] : 0.0;
      for (int i = 0; i < In; ++i) acc += static_cast<double>(xrow[i]) * wrow[i];
      y->v[static_cast<size_t>(bi) * Out + o] = static_cast<float>(acc);
    }
  }
  if (tracked) {
    tape->record([=]() {
      for (int bi = 0; bi < B; ++bi) {
        const float* xrow = &x->v[static_cast<size_t>(bi) * In];
        float* xgrow = x->requires_grad ? &x->g[static_cast<size_t>(bi) * In] : nullptr;
        for (int o = 0; o < Out; ++o) {
          const float gy = y->g[static_cast<size_t>(bi) * Out + o];
          if (gy == 0.0f) continue;
          const float* wrow = &w->v[static_cast<size_t>(o) * In];
          if (b && b->requires_grad) b->g[static_cast<size_t>(o)] += gy;
          if (w->requires_grad) {
            float* wgrow = &w->g[static_cast<size_t>(o) * In];
            for (int i = 0; i < In; ++i) wgrow[i] += gy * xrow[i];
          }
          if (xgrow)
            for (int i = 0; i < In; ++i) xgrow[i] += gy * wrow[i];
        }
      }
    });
  }
  return y;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  require(a->shape == b->shape, "add: shape mismatch");
  const bool tracked = track(tape, {&a, &b});
  auto y = out_like(a->shape, tracked);
  for (size_t i = 0; i < a->v.size(); ++i) y->v[i] = a->v[i] + b->v[i];
  if (tracked) {
    tape->record([=]() {
      for (size_t i = 0; i < y->g.size(); ++i) {
        if (a->requires_grad) a->g[i] += y->g[i];
        if (b->requires_grad) b->g[i] += y->g[i];
      }
    });
  }
  return y;
}

TensorPtr concat_channels(Tape* tape, const std::vector<TensorPtr>& parts) {
  require(!parts.empty(), "concat: no inputs");
  const auto& first = parts.front();
  require(first->shape.size() == 4, "concat: inputs must be {B,C,M,N}");
  const int B = first->dim(0), M = first->dim(2), N = first->dim(3);
  int Ctot = 0;
  for (const auto& p : parts) {
    require(p->shape.size() == 4 && p->dim(0) == B && p->dim(2) == M && p->dim(3) == N,
            "concat: shape mismatch");
    Ctot += p->dim(1);
  }
  bool tracked = false;
  if (tape)
    for (const auto& p : parts) tracked = tracked || p->requires_grad;
  auto y = out_like({B, Ctot, M, N}, tracked);
  const size_t plane = static_cast<size_t>(M) * N;
  for (int bi = 0; bi < B; ++bi) {
    size_t coff = 0;
    for (const auto& p : parts) {
      const size_t nch = static_cast<size_t>(p->dim(1));
      std::copy_n(&p->v[static_cast<size_t>(bi) * nch * plane], nch * plane,
                  &y->v[(static_cast<size_t>(bi) * Ctot + coff) * plane]);
      coff += nch;
    }
  }
  if (tracked) {
    tape->record([=]() {
      for (int bi = 0; bi < B; ++bi) {
        size_t coff = 0;
        for (const auto& p : parts) {
          const size_t nch = static_cast<size_t>(p->dim(1));
          if (p->requires_grad) {
            const float* src = &y->g[(static_cast<size_t>(bi) * Ctot + coff) * plane];
            float* dst = &p->g[static_cast<size_t>(bi) * nch * plane];
            for (size_t i = 0; i < nch * plane; ++i) dst[i] += src[i];
          }
          coff += nch;
        }
      }
    });
  }
  return y;
}

TensorPtr flatten_spatial(Tape* tape, const TensorPtr& x) {
  require(x->shape.size() == 4 && x->dim(2) == 1 && x->dim(3) == 1,
          "flatten_spatial: input must be {B,C,1,1}");
  const bool tracked = track(tape, {&x});
  auto y = out_like({x->dim(0), x->dim(1)}, tracked);
  y->v = x->v;
  if (tracked) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      for (size_t i = 0; i < y->g.size(); ++i) x->g[i] += y->g[i];
    });
  }
  return y;
}

TensorPtr reshape(Tape* tape, const TensorPtr& x, std::vector<int> shape) {
  const bool tracked = track(tape, {&x});
  auto y = out_like(std::move(shape), tracked);
  require(y->numel() == x->numel(), "reshape: element count mismatch");
  y->v = x->v;
  if (tracked) {
    tape->record([=]() {
      if (!x->requires_grad) return;
      for (size_t i = 0; i < y->g.size(); ++i) x->g[i] += y->g[i];
    });
  }
  return y;
}

}  // namespace mavgram::nn
