#pragma once

#include <cstdint>
#include <vector>

#include "mavgram/manifest.hpp"

namespace mavgram {

struct SplitResult {
  std::vector<SampleRecord> finetune;
  std::vector<SampleRecord> test;
};

// Tags a fixed, seeded 75% stratified test split, then draws `percent` of the
// full dataset (stratified, largest-remainder with per-class caps) from the
// remaining pool as the fine-tune set. For one seed the test membership is
// identical across percent values, and smaller-percent fine-tune sets are
// prefixes of larger ones (nested subsets). percent must lie in (0, 25].
SplitResult split_finetune(const std::vector<SampleRecord>& records, double percent,
                           uint64_t seed);

}  // namespace mavgram
