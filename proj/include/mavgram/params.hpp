#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mavgram/autograd.hpp"
#include "mavgram/rng.hpp"

namespace mavgram {

// Parameter groups drive the freeze policy during fine-tuning.
enum class Group : uint8_t {
  tgram_a = 0,
  tgram_v = 1,
  mfn_backbone = 2,
  mfn_last_fc = 3,
  arcface_head = 4,
};

const char* group_name(Group g);
Group group_from_byte(uint8_t b);

struct ParamEntry {
  std::string name;
  Group group;
  bool learnable;  // false for state like batch-norm running statistics
  nn::TensorPtr tensor;
};

// Ordered collection of named trainable tensors. Insertion order is the
// canonical order for checkpoints and optimizer iteration.
class ParamStore {
 public:
  // Adds a fresh tensor; throws on duplicate names. Non-learnable tensors
  // (running statistics) never receive gradients regardless of group toggles.
  nn::TensorPtr add(const std::string& name, Group group, std::vector<int> shape,
                    bool learnable = true);
  nn::TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const;
  Group group_of(const std::string& name) const;

  const std::vector<ParamEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  // Enables/disables gradients for every tensor in a group.
  void set_trainable_group(Group group, bool trainable);
  void set_all_trainable(bool trainable);

  // Zeroes gradients of trainable tensors (allocating if needed).
  void zero_grads();

  // Deep value copy for snapshot/restore (shapes must already match on restore).
  std::map<std::string, std::vector<float>> snapshot_values() const;
  void restore_values(const std::map<std::string, std::vector<float>>& snap);

 private:
  std::vector<ParamEntry> entries_;
  std::map<std::string, size_t> index_;
};

// Initialization policy. Weight tensors get uniform(-limit, limit) with
// limit = sqrt(3 / fan_in); biases zero; PReLU slopes 0.25; norm gains one,
// shifts zero; running stats identity. Each tensor draws from its own named
// stream so adding a parameter never shifts another's values.
void init_conv_weight(const nn::TensorPtr& w, const Rng& base, const std::string& name);
void init_linear_weight(const nn::TensorPtr& w, const Rng& base, const std::string& name);
void fill_constant(const nn::TensorPtr& t, float value);

}  // namespace mavgram
