#pragma once

#include <map>
#include <string>
#include <vector>

#include "mavgram/params.hpp"

namespace mavgram {

// Cosine annealing: lr(t) = min + (base - min)/2 * (1 + cos(pi*t/T)).
struct LrSchedule {
  double base_lr = 0.0005;
  double min_lr = 0.0;
  int total_epochs = 200;
};

double lr_at(const LrSchedule& sched, int epoch);  // rejects epoch outside [0, T]

// Bias-corrected Adam over a ParamStore. Frozen tensors are skipped and stay
// bitwise unchanged. Moment slots persist across steps keyed by name.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // One update over every trainable tensor; throws if a trainable tensor has
  // no gradient buffer.
  void step(ParamStore& params, double lr);

  int64_t step_count() const { return t_; }

 private:
  struct Slot {
    std::vector<float> m, v;
  };
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::map<std::string, Slot> slots_;
};

}  // namespace mavgram
