#include "mavgram/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mavgram/rng.hpp"

namespace mavgram {

namespace {

// Apportions `total` across classes proportionally to quotas, never exceeding
// caps: floor allocation first, then +1 by descending fractional part
// (class-index tiebreak), cycling until the total is met.
std::vector<int64_t> apportion(int64_t total, const std::vector<double>& quotas,
                               const std::vector<int64_t>& caps) {
  const size_t n = quotas.size();
  std::vector<int64_t> alloc(n);
  std::vector<std::pair<double, size_t>> order;  // (-frac, class)
  int64_t assigned = 0, room = 0;
  for (size_t c = 0; c < n; ++c) {
    alloc[c] = std::min(static_cast<int64_t>(std::floor(quotas[c])), caps[c]);
    assigned += alloc[c];
    room += caps[c];
    order.emplace_back(-(quotas[c] - std::floor(quotas[c])), c);
  }
  if (room < total) throw std::invalid_argument("split: allocation exceeds pool");
  std::sort(order.begin(), order.end());
  while (assigned < total) {
    bool progressed = false;
    for (const auto& [negfrac, c] : order) {
      if (assigned == total) break;
      if (alloc[c] < caps[c]) {
        ++alloc[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) throw std::logic_error("split: apportionment stalled");
  }
  return alloc;
}

}  // namespace

SplitResult split_finetune(const std::vector<SampleRecord>& records, double percent,
                           uint64_t seed) {
  if (!(percent > 0.0)) throw std::invalid_argument("split: percent must be positive");
  if (percent > 25.0)
    throw std::invalid_argument(
        "split: percent above 25 would intersect the fixed 75% test split");
  if (records.empty()) throw std::invalid_argument("split: no records");

  std::map<int, std::vector<size_t>> by_label;
  for (size_t i = 0; i < records.size(); ++i)
    by_label[records[i].label].push_back(i);

  const Rng base = Rng(seed).stream("split");
  for (auto& [label, idx] : by_label) {
    Rng r = base.stream("class:" + std::to_string(label));
    r.shuffle(idx);
  }

  const auto N = static_cast<int64_t>(records.size());
  std::vector<int> labels;
  std::vector<double> test_quota, ft_quota;
  std::vector<int64_t> class_size;
  for (const auto& [label, idx] : by_label) {
    labels.push_back(label);
    class_size.push_back(static_cast<int64_t>(idx.size()));
    test_quota.push_back(0.75 * static_cast<double>(idx.size()));
    ft_quota.push_back(percent / 100.0 * static_cast<double>(idx.size()));
  }

  const auto test_alloc =
      apportion(std::llround(0.75 * static_cast<double>(N)), test_quota, class_size);
  std::vector<int64_t> pool(labels.size());
  for (size_t c = 0; c < labels.size(); ++c) pool[c] = class_size[c] - test_alloc[c];
  const auto ft_alloc = apportion(
      std::llround(percent / 100.0 * static_cast<double>(N)), ft_quota, pool);

  SplitResult out;
  for (size_t c = 0; c < labels.size(); ++c) {
    const auto& idx = by_label[labels[c]];
    for (int64_t i = 0; i < test_alloc[c]; ++i) {
      SampleRecord r = records[idx[static_cast<size_t>(i)]];
      r.split = SplitTag::test;
      out.test.push_back(std::move(r));
    }
    for (int64_t i = 0; i < ft_alloc[c]; ++i) {
      SampleRecord r = records[idx[static_cast<size_t>(test_alloc[c] + i)]];
      r.split = SplitTag::finetune;
      out.finetune.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace mavgram
