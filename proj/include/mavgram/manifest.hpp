#pragma once

#include <string>
#include <vector>

namespace mavgram {

enum class SplitTag { train, finetune, test };

const char* split_name(SplitTag s);
SplitTag split_from_string(const std::string& s);

struct SampleRecord {
  std::string id;
  std::string acoustic_path;   // resolved to absolute on load
  std::string vibration_path;  // resolved to absolute on load
  double acoustic_rate = 0.0;
  double vibration_rate = 0.0;
  int label = 0;  // 0 healthy, 1 outer race, 2 inner race, 3 ball, 4 cage
  SplitTag split = SplitTag::train;
};

// Line-delimited JSON records. Paths inside the file are relative to the
// manifest's directory; load resolves them and verifies existence. Errors
// name the offending line. Duplicate ids are rejected.
std::vector<SampleRecord> load_manifest(const std::string& path);

// Writes records with paths relativized against the manifest directory when
// possible. Atomic (temp file + rename).
void write_manifest(const std::string& path, const std::vector<SampleRecord>& records);

}  // namespace mavgram
