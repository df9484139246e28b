#include "mavgram/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mavgram {

double lr_at(const LrSchedule& sched, int epoch) {
  if (sched.total_epochs <= 0) throw std::invalid_argument("schedule: T must be positive");
  if (epoch < 0 || epoch > sched.total_epochs)
    throw std::out_of_range("schedule: epoch outside [0, T]");
  const double phase = M_PI * static_cast<double>(epoch) / sched.total_epochs;
  return sched.min_lr + 0.5 * (sched.base_lr - sched.min_lr) * (1.0 + std::cos(phase));
}

Adam::Adam(double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ParamStore& params, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& e : params.entries()) {
    auto& t = *e.tensor;
    if (!t.requires_grad) continue;
    if (t.g.size() != t.v.size())
      throw std::invalid_argument("adam: trainable tensor missing gradient: " + e.name);
    auto& slot = slots_[e.name];
    if (slot.m.size() != t.v.size()) {
      slot.m.assign(t.v.size(), 0.0f);
      slot.v.assign(t.v.size(), 0.0f);
    }
    for (size_t i = 0; i < t.v.size(); ++i) {
      const double g = t.g[i];
      const double m = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
      const double v = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
      slot.m[i] = static_cast<float>(m);
      slot.v[i] = static_cast<float>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      t.v[i] = static_cast<float>(t.v[i] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

}  // namespace mavgram
