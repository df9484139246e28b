#include "mavgram/arcface.hpp"

#include <cmath>
#include <stdexcept>

namespace mavgram {

void ArcFaceConfig::validate() const {
  if (!(margin >= 0.0 && margin < M_PI))
    throw std::invalid_argument("arcface: margin must lie in [0, pi)");
  if (!(scale > 0.0)) throw std::invalid_argument("arcface: scale must be positive");
}

nn::TensorPtr arcface_build(ParamStore& params, int classes, int embed_dim,
                            const Rng& init_rng) {
  if (classes < 2) throw std::invalid_argument("arcface: need at least 2 classes");
  auto w = params.add("arcface.w", Group::arcface_head, {classes, embed_dim});
  init_linear_weight(w, init_rng, "arcface.w");
  return w;
}

namespace {

double row_norm(const float* p, int n, const char* what) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += static_cast<double>(p[i]) * p[i];
  const double norm = std::sqrt(acc);
  if (!(norm > 0.0)) throw std::invalid_argument(what);
  return norm;
}

}  // namespace

nn::TensorPtr arcface_logits(nn::Tape* tape, const nn::TensorPtr& emb,
                             const nn::TensorPtr& weight,
                             const std::vector<int>& targets,
                             const ArcFaceConfig& cfg) {
  cfg.validate();
  if (emb->shape.size() != 2 || weight->shape.size() != 2 ||
      emb->dim(1) != weight->dim(1))
    throw std::invalid_argument("arcface: embedding/weight shape mismatch");
  const int B = emb->dim(0), E = emb->dim(1), C = weight->dim(0);
  if (!targets.empty()) {
    if (static_cast<int>(targets.size()) != B)
      throw std::invalid_argument("arcface: target count must match batch");
    for (int t : targets)
      if (t < 0 || t >= C) throw std::invalid_argument("arcface: target out of range");
  }

  auto enorm = std::make_shared<std::vector<double>>(static_cast<size_t>(B));
  auto wnorm = std::make_shared<std::vector<double>>(static_cast<size_t>(C));
  auto cosines = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * C);
  for (int b = 0; b < B; ++b)
    (*enorm)[static_cast<size_t>(b)] =
        row_norm(&emb->v[static_cast<size_t>(b) * E], E, "arcface: zero embedding");
  for (int j = 0; j < C; ++j)
    (*wnorm)[static_cast<size_t>(j)] = row_norm(&weight->v[static_cast<size_t>(j) * E],
                                                E, "arcface: zero weight row");

  const bool tracked = tape && (emb->requires_grad || weight->requires_grad);
  auto y = nn::make_tensor({B, C}, tracked);
  const double m = cfg.margin, s = cfg.scale;
  const double cos_m = std::cos(m), sin_m = std::sin(m);
  const double branch = std::cos(M_PI - m);
  for (int b = 0; b < B; ++b) {
    const float* erow = &emb->v[static_cast<size_t>(b) * E];
    const double en = (*enorm)[static_cast<size_t>(b)];
    for (int j = 0; j < C; ++j) {
      const float* wrow = &weight->v[static_cast<size_t>(j) * E];
      double dot = 0.0;
      for (int i = 0; i < E; ++i) dot += static_cast<double>(erow[i]) * wrow[i];
      double c = dot / (en * (*wnorm)[static_cast<size_t>(j)]);
      c = std::min(1.0, std::max(-1.0, c));
      (*cosines)[static_cast<size_t>(b) * C + j] = c;
      double logit = s * c;
      if (!targets.empty() && targets[static_cast<size_t>(b)] == j) {
        if (c > branch) {
          const double sin_t = std::sqrt(std::max(0.0, 1.0 - c * c));
          logit = s * (c * cos_m - sin_t * sin_m);
        } else {
          logit = s * (c - m * sin_m);
        }
      }
      y->v[static_cast<size_t>(b) * C + j] = static_cast<float>(logit);
    }
  }

  if (tracked) {
    auto tg = targets;  // captured copy
    tape->record([=]() {
      for (int b = 0; b < B; ++b) {
        const float* erow = &emb->v[static_cast<size_t>(b) * E];
        const double en = (*enorm)[static_cast<size_t>(b)];
        for (int j = 0; j < C; ++j) {
          const float gy = y->g[static_cast<size_t>(b) * C + j];
          if (gy == 0.0f) continue;
          const double c = (*cosines)[static_cast<size_t>(b) * C + j];
          double dl_dc = s;
          if (!tg.empty() && tg[static_cast<size_t>(b)] == j) {
            if (c > branch) {
              const double sin_t = std::sqrt(std::max(1.0 - c * c, 1e-12));
              dl_dc = s * (cos_m + c * sin_m / sin_t);
            }  // fallback branch is linear in c with slope s
          }
          const double gc = static_cast<double>(gy) * dl_dc;
          const float* wrow = &weight->v[static_cast<size_t>(j) * E];
          const double wn = (*wnorm)[static_cast<size_t>(j)];
          // dc/de = (w_hat - c*e_hat)/|e| ; dc/dw = (e_hat - c*w_hat)/|w|
          for (int i = 0; i < E; ++i) {
            const double ehat = erow[i] / en;
            const double what = wrow[i] / wn;
            if (emb->requires_grad)
              emb->g[static_cast<size_t>(b) * E + i] +=
                  static_cast<float>(gc * (what - c * ehat) / en);
            if (weight->requires_grad)
              weight->g[static_cast<size_t>(j) * E + i] +=
                  static_cast<float>(gc * (ehat - c * what) / wn);
          }
        }
      }
    });
  }
  return y;
}

double cross_entropy(const std::vector<double>& logits, int target) {
  if (logits.empty()) throw std::invalid_argument("cross_entropy: empty logits");
  if (target < 0 || target >= static_cast<int>(logits.size()))
    throw std::invalid_argument("cross_entropy: target out of range");
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l - mx);
  return -(logits[static_cast<size_t>(target)] - mx - std::log(denom));
}

double softmax_ce_mean(nn::Tape* tape, const nn::TensorPtr& logits,
                       const std::vector<int>& targets) {
  if (logits->shape.size() != 2)
    throw std::invalid_argument("softmax_ce: logits must be {B,C}");
  const int B = logits->dim(0), C = logits->dim(1);
  if (static_cast<int>(targets.size()) != B)
    throw std::invalid_argument("softmax_ce: target count must match batch");
  for (int t : targets)
    if (t < 0 || t >= C) throw std::invalid_argument("softmax_ce: target out of range");

  auto probs = std::make_shared<std::vector<double>>(static_cast<size_t>(B) * C);
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    const float* row = &logits->v[static_cast<size_t>(b) * C];
    double mx = row[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double denom = 0.0;
    for (int j = 0; j < C; ++j) {
      const double e = std::exp(row[j] - mx);
      (*probs)[static_cast<size_t>(b) * C + j] = e;
      denom += e;
    }
    for (int j = 0; j < C; ++j) (*probs)[static_cast<size_t>(b) * C + j] /= denom;
    total += -std::log((*probs)[static_cast<size_t>(b) * C + targets[static_cast<size_t>(b)]]);
  }
  const double loss = total / B;

  if (tape && logits->requires_grad) {
    logits->ensure_grad();
    auto tg = targets;
    tape->record([=]() {
      for (int b = 0; b < B; ++b) {
        for (int j = 0; j < C; ++j) {
          double g = (*probs)[static_cast<size_t>(b) * C + j];
          if (j == tg[static_cast<size_t>(b)]) g -= 1.0;
          logits->g[static_cast<size_t>(b) * C + j] += static_cast<float>(g / B);
        }
      }
    });
  }
  return loss;
}

}  // namespace mavgram
