#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mavgram/config.hpp"
#include "mavgram/train.hpp"

namespace mavgram {

// Path-level orchestration used by both the CLI and the Python module.
// Every run directory receives the effective config, a metrics log, the
// artifacts, and an artifact-hash list sufficient to re-run bit-identically.

struct RunSummary {
  std::string checkpoint_path;
  std::string report_path;       // empty for pretrain
  double macro_accuracy = -1.0;  // negative when no evaluation happened
  double final_loss = 0.0;
};

// Generates a synthetic dataset; refuses a non-empty out_dir unless force.
// Returns the number of records written.
int run_synth(const std::string& profile_name, int classes, int per_class,
              uint64_t seed, const std::string& out_dir, bool force);

// Dumps per-record feature maps ("<id>/M", and "/A", "/V" when a checkpoint
// supplies TgramNet weights) into a feature-cache file. Returns record count.
int run_featurize(const TrainConfig& cfg, const std::string& manifest_path,
                  const std::string& ckpt_path, const std::string& out_file);

RunSummary run_pretrain(const TrainConfig& cfg, const std::string& manifest_path,
                        const std::string& out_dir, bool force, bool echo);

// Splits the target manifest (fixed 75% test + `percent` fine-tune subset,
// both seeded by cfg.seed), fine-tunes from the checkpoint, evaluates on the
// test split, and writes report.txt plus a percent-vs-accuracy CSV row.
RunSummary run_finetune(const TrainConfig& cfg, const std::string& ckpt_path,
                        const std::string& manifest_path, double percent,
                        const std::string& out_dir, bool force, bool echo);

// Evaluates a checkpoint on the manifest's test-tagged records (all records
// when none are tagged).
RunSummary run_eval(const TrainConfig& cfg, const std::string& ckpt_path,
                    const std::string& manifest_path, const std::string& out_dir,
                    bool force, bool echo);

struct AblateRequest {
  std::vector<Variant> variants;
  std::vector<double> percents;
  std::vector<uint64_t> seeds;
  // optional speed-perturbation grid; when non-empty, rows are (n, s) pairs
  // on the first variant instead of feature variants
  std::vector<std::pair<int, double>> speed_cells;
  std::string source_manifest;
  std::string target_manifest;
  int workers = 1;
};

// Full pretrain -> finetune -> eval matrix; writes table.txt / table.csv with
// rows = variant (or (n,s) cell) and columns = fine-tune percent, cells =
// mean macro accuracy over seeds. Returns the CSV text.
std::string run_ablate(const TrainConfig& base_cfg, const AblateRequest& req,
                       const std::string& out_dir, bool force, bool echo);

// FNV-1a of a file's bytes (artifact hashing).
uint64_t hash_file(const std::string& path);

}  // namespace mavgram
