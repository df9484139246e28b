#include "mavgram/params.hpp"

#include <cmath>
#include <stdexcept>

namespace mavgram {

const char* group_name(Group g) {
  switch (g) {
    case Group::tgram_a: return "tgram_a";
    case Group::tgram_v: return "tgram_v";
    case Group::mfn_backbone: return "mfn_backbone";
    case Group::mfn_last_fc: return "mfn_last_fc";
    case Group::arcface_head: return "arcface_head";
  }
  throw std::invalid_argument("unknown parameter group");
}

Group group_from_byte(uint8_t b) {
  if (b > 4) throw std::invalid_argument("unknown parameter group byte");
  return static_cast<Group>(b);
}

nn::TensorPtr ParamStore::add(const std::string& name, Group group,
                              std::vector<int> shape, bool learnable) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  auto t = nn::make_tensor(std::move(shape), learnable);
  index_[name] = entries_.size();
  entries_.push_back({name, group, learnable, t});
  return t;
}

nn::TensorPtr ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return entries_[it->second].tensor;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) != 0; }

Group ParamStore::group_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return entries_[it->second].group;
}

void ParamStore::set_trainable_group(Group group, bool trainable) {
  for (auto& e : entries_) {
    if (e.group != group) continue;
    e.tensor->requires_grad = trainable && e.learnable;
    if (e.tensor->requires_grad) e.tensor->ensure_grad();
  }
}

void ParamStore::set_all_trainable(bool trainable) {
  for (auto& e : entries_) {
    e.tensor->requires_grad = trainable && e.learnable;
    if (e.tensor->requires_grad) e.tensor->ensure_grad();
  }
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) {
    if (!e.tensor->requires_grad) continue;
    e.tensor->ensure_grad();
    std::fill(e.tensor->g.begin(), e.tensor->g.end(), 0.0f);
  }
}

std::map<std::string, std::vector<float>> ParamStore::snapshot_values() const {
  std::map<std::string, std::vector<float>> snap;
  for (const auto& e : entries_) snap[e.name] = e.tensor->v;
  return snap;
}

void ParamStore::restore_values(const std::map<std::string, std::vector<float>>& snap) {
  for (auto& e : entries_) {
    auto it = snap.find(e.name);
    if (it == snap.end()) throw std::invalid_argument("snapshot missing: " + e.name);
    if (it->second.size() != e.tensor->v.size())
      throw std::invalid_argument("snapshot shape mismatch: " + e.name);
    e.tensor->v = it->second;
  }
}

namespace {

void init_uniform_fan_in(const nn::TensorPtr& w, const Rng& base,
                         const std::string& name, int64_t fan_in) {
  if (fan_in <= 0) throw std::invalid_argument("init: non-positive fan-in");
  const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
  Rng rng = base.stream("init:" + name);
  for (auto& x : w->v) x = static_cast<float>(rng.uniform(-limit, limit));
}

}  // namespace

void init_conv_weight(const nn::TensorPtr& w, const Rng& base, const std::string& name) {
  // fan_in = Cin * prod(kernel dims); weight layout {Cout, Cin, k...}
  if (w->shape.size() < 3) throw std::invalid_argument("init: conv weight rank < 3");
  int64_t fan_in = 1;
  for (size_t i = 1; i < w->shape.size(); ++i) fan_in *= w->shape[i];
  init_uniform_fan_in(w, base, name, fan_in);
}

void init_linear_weight(const nn::TensorPtr& w, const Rng& base,
                        const std::string& name) {
  if (w->shape.size() != 2) throw std::invalid_argument("init: linear weight rank != 2");
  init_uniform_fan_in(w, base, name, w->shape[1]);
}

void fill_constant(const nn::TensorPtr& t, float value) {
  std::fill(t->v.begin(), t->v.end(), value);
}

}  // namespace mavgram
