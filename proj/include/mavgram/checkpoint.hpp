#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mavgram/params.hpp"

namespace mavgram {

// On-disk model state. Layout: magic "MAVG", version byte, metadata block
// (u32 count, then length-prefixed UTF-8 key/value pairs: config text and
// hash, epoch, class map), u32 tensor count, then per tensor: u32 name
// length + name, group byte, trainable byte, rank byte, u32 dims, f32
// values — all integers and floats little-endian. A trailing byte flags
// optional optimizer-state records in the same tensor layout.
struct TensorRecord {
  std::string name;
  uint8_t group = 0;
  uint8_t trainable = 0;
  std::vector<int> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<TensorRecord> tensors;
  std::vector<TensorRecord> opt_state;  // empty = absent
};

inline constexpr uint8_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);  // atomic
Checkpoint load_checkpoint(const std::string& path);

// Snapshot of every parameter in store order.
Checkpoint checkpoint_from_params(const ParamStore& params,
                                  std::map<std::string, std::string> metadata);

// Bitwise restore of values + trainable flags + group consistency check.
// Tensors absent from the store (or vice versa) are rejected.
void params_from_checkpoint(const Checkpoint& ckpt, ParamStore& params);

// Copies values for names present in both, skipping `skip` (used to carry a
// pretrained backbone into a fresh fine-tune parameter set with a new head).
void copy_matching_values(const Checkpoint& ckpt, ParamStore& params,
                          const std::vector<std::string>& skip);

}  // namespace mavgram
