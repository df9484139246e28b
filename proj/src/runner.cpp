#include "mavgram/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mavgram/feature_cache.hpp"
#include "mavgram/splits.hpp"
#include "mavgram/synth.hpp"
#include "mavgram/tgram.hpp"

namespace fs = std::filesystem;

namespace mavgram {

namespace {

void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error(path + ": write failed");
}

void prepare_run_dir(const std::string& out_dir, bool force) {
  const fs::path dir(out_dir);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force)
      throw std::runtime_error(out_dir +
                               ": output directory is not empty (use --force)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void echo_config(const TrainConfig& cfg, const std::string& out_dir) {
  write_text((fs::path(out_dir) / "config.ini").string(), serialize_config(cfg));
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void append_hash(std::string& hashes, const std::string& out_dir,
                 const std::string& path) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_file(path)));
  hashes += std::string(buf) + "  " +
            fs::path(path).lexically_proximate(fs::path(out_dir)).generic_string() +
            "\n";
}

std::string metrics_line(const EpochStats& st) {
  return "epoch " + std::to_string(st.epoch) + " lr " + fmt6(st.lr) + " loss " +
         fmt6(st.loss) + " acc " + fmt6(st.accuracy) + "\n";
}

}  // namespace

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for hashing");
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return fnv1a64(data);
}

int run_synth(const std::string& profile_name, int classes, int per_class,
              uint64_t seed, const std::string& out_dir, bool force) {
  prepare_run_dir(out_dir, force);
  const SynthProfile profile = profile_by_name(profile_name);
  const auto records = synth_dataset(profile, classes, per_class, seed, out_dir);

  std::string hashes;
  for (const auto& r : records) {
    append_hash(hashes, out_dir, r.acoustic_path);
    append_hash(hashes, out_dir, r.vibration_path);
  }
  append_hash(hashes, out_dir, (fs::path(out_dir) / "manifest.jsonl").string());
  write_text((fs::path(out_dir) / "hashes.txt").string(), hashes);
  return static_cast<int>(records.size());
}

int run_featurize(const TrainConfig& cfg, const std::string& manifest_path,
                  const std::string& ckpt_path, const std::string& out_file) {
  cfg.validate();
  const auto records = load_manifest(manifest_path);

  ParamStore params;
  bool have_params = false;
  if (!ckpt_path.empty()) {
    params = build_model(cfg, cfg.seed);
    params_from_checkpoint(load_checkpoint(ckpt_path), params);
    have_params = true;
  }
  const bool dump_a = have_params && variant_uses(cfg.variant, "A");
  const bool dump_v = have_params && variant_uses(cfg.variant, "V");

  std::vector<FeatureRecord> out;
  for (const auto& rec : records) {
    const LoadedSample s = load_and_canonicalize(rec, cfg.features);
    const FeatureMap m = log_mel(s.acoustic, cfg.features.stft, cfg.features.mel);
    out.push_back({rec.id + "/M", {m.mels, m.frames}, m.data});
    if (dump_a) {
      const FeatureMap a =
          tgram_feature(params, "tgram_a.", s.acoustic, cfg.features.tgram, "A");
      out.push_back({rec.id + "/A", {a.mels, a.frames}, a.data});
    }
    if (dump_v) {
      const FeatureMap v =
          tgram_feature(params, "tgram_v.", s.vibration, cfg.features.tgram, "V");
      out.push_back({rec.id + "/V", {v.mels, v.frames}, v.data});
    }
  }
  write_feature_cache(out_file, out);
  return static_cast<int>(records.size());
}

RunSummary run_pretrain(const TrainConfig& cfg, const std::string& manifest_path,
                        const std::string& out_dir, bool force, bool echo) {
  prepare_run_dir(out_dir, force);
  echo_config(cfg, out_dir);
  const auto records = load_manifest(manifest_path);

  std::ofstream metrics((fs::path(out_dir) / "metrics.log").string(),
                        std::ios::binary | std::ios::trunc);
  const TrainResult res =
      pretrain(cfg, records, [&](const EpochStats& st) {
        const std::string line = metrics_line(st);
        metrics << line << std::flush;
        if (echo) std::cout << line << std::flush;
      });

  RunSummary sum;
  sum.checkpoint_path = (fs::path(out_dir) / "checkpoint.mavg").string();
  save_checkpoint(res.best, sum.checkpoint_path);
  sum.final_loss = res.log.back().loss;
  metrics.close();

  std::string hashes;
  append_hash(hashes, out_dir, (fs::path(out_dir) / "config.ini").string());
  append_hash(hashes, out_dir, (fs::path(out_dir) / "metrics.log").string());
  append_hash(hashes, out_dir, sum.checkpoint_path);
  write_text((fs::path(out_dir) / "hashes.txt").string(), hashes);
  return sum;
}

RunSummary run_finetune(const TrainConfig& cfg, const std::string& ckpt_path,
                        const std::string& manifest_path, double percent,
                        const std::string& out_dir, bool force, bool echo) {
  prepare_run_dir(out_dir, force);
  echo_config(cfg, out_dir);
  const auto records = load_manifest(manifest_path);
  const SplitResult split = split_finetune(records, percent, cfg.seed);
  const Checkpoint base = load_checkpoint(ckpt_path);

  std::ofstream metrics((fs::path(out_dir) / "metrics.log").string(),
                        std::ios::binary | std::ios::trunc);
  const TrainResult res =
      finetune(base, cfg, split.finetune, [&](const EpochStats& st) {
        const std::string line = metrics_line(st);
        metrics << line << std::flush;
        if (echo) std::cout << line << std::flush;
      });
  metrics.close();

  RunSummary sum;
  sum.checkpoint_path = (fs::path(out_dir) / "checkpoint.mavg").string();
  save_checkpoint(res.best, sum.checkpoint_path);
  sum.final_loss = res.log.back().loss;

  const Report rep = evaluate(res.best, cfg, split.test);
  sum.macro_accuracy = rep.macro_accuracy;
  sum.report_path = (fs::path(out_dir) / "report.txt").string();
  write_text(sum.report_path, rep.to_text());
  write_text((fs::path(out_dir) / "accuracy.csv").string(),
             "percent,macro_accuracy\n" + fmt6(percent) + "," +
                 fmt6(rep.macro_accuracy) + "\n");

  std::string hashes;
  append_hash(hashes, out_dir, (fs::path(out_dir) / "config.ini").string());
  append_hash(hashes, out_dir, (fs::path(out_dir) / "metrics.log").string());
  append_hash(hashes, out_dir, sum.checkpoint_path);
  append_hash(hashes, out_dir, sum.report_path);
  append_hash(hashes, out_dir, (fs::path(out_dir) / "accuracy.csv").string());
  write_text((fs::path(out_dir) / "hashes.txt").string(), hashes);
  return sum;
}

RunSummary run_eval(const TrainConfig& cfg, const std::string& ckpt_path,
                    const std::string& manifest_path, const std::string& out_dir,
                    bool force, bool echo) {
  prepare_run_dir(out_dir, force);
  echo_config(cfg, out_dir);
  auto records = load_manifest(manifest_path);
  std::vector<SampleRecord> test;
  for (const auto& r : records)
    if (r.split == SplitTag::test) test.push_back(r);
  if (test.empty()) test = records;

  const Report rep = evaluate(load_checkpoint(ckpt_path), cfg, test);
  RunSummary sum;
  sum.checkpoint_path = ckpt_path;
  sum.macro_accuracy = rep.macro_accuracy;
  sum.report_path = (fs::path(out_dir) / "report.txt").string();
  write_text(sum.report_path, rep.to_text());
  if (echo) std::cout << rep.to_text();

  std::string hashes;
  append_hash(hashes, out_dir, (fs::path(out_dir) / "config.ini").string());
  append_hash(hashes, out_dir, sum.report_path);
  write_text((fs::path(out_dir) / "hashes.txt").string(), hashes);
  return sum;
}

namespace {

struct Cell {
  std::string row_label;
  Variant variant;
  int speed_n;
  double speed_s;
  uint64_t seed;
};

}  // namespace

std::string run_ablate(const TrainConfig& base_cfg, const AblateRequest& req,
                       const std::string& out_dir, bool force, bool echo) {
  if (req.variants.empty() && req.speed_cells.empty())
    throw std::invalid_argument("ablate: nothing to run");
  if (req.percents.empty() || req.seeds.empty())
    throw std::invalid_argument("ablate: need at least one percent and one seed");
  prepare_run_dir(out_dir, force);
  echo_config(base_cfg, out_dir);

  // row set: feature variants, or (n, s) speed cells on a fixed variant
  std::vector<std::pair<std::string, TrainConfig>> rows;
  if (req.speed_cells.empty()) {
    for (Variant v : req.variants) {
      TrainConfig cfg = base_cfg;
      cfg.variant = v;
      rows.emplace_back(to_string(v), cfg);
    }
  } else {
    for (const auto& [n, s] : req.speed_cells) {
      TrainConfig cfg = base_cfg;
      cfg.speed_n = n;
      cfg.speed_s = s;
      char label[32];
      std::snprintf(label, sizeof label, "n%d_s%.10g", n, s);
      rows.emplace_back(label, cfg);
    }
  }

  struct Job {
    size_t row;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (size_t r = 0; r < rows.size(); ++r)
    for (uint64_t seed : req.seeds) jobs.push_back({r, seed});

  // accuracy[row][percent_index] accumulated over seeds
  std::vector<std::vector<double>> acc(rows.size(),
                                       std::vector<double>(req.percents.size(), 0.0));
  std::mutex mu;
  std::atomic<size_t> next{0};
  const int workers = std::max(1, req.workers);

  auto worker = [&]() {
    for (;;) {
      const size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job job = jobs[j];
      TrainConfig cfg = rows[job.row].second;
      cfg.seed = job.seed;
      const std::string cell_dir =
          (fs::path(out_dir) / "cells" /
           (rows[job.row].first + "_seed" + std::to_string(job.seed)))
              .string();
      const RunSummary pre = run_pretrain(cfg, req.source_manifest,
                                          cell_dir + "/pretrain", true, false);
      for (size_t p = 0; p < req.percents.size(); ++p) {
        const double percent = req.percents[p];
        char sub[48];
        std::snprintf(sub, sizeof sub, "/finetune_p%.10g", percent);
        const RunSummary ft =
            run_finetune(cfg, pre.checkpoint_path, req.target_manifest, percent,
                         cell_dir + sub, true, false);
        std::lock_guard<std::mutex> lock(mu);
        acc[job.row][p] += ft.macro_accuracy;
        if (echo)
          std::cout << rows[job.row].first << " seed " << job.seed << " percent "
                    << percent << " acc " << fmt6(ft.macro_accuracy) << "\n"
                    << std::flush;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const auto nseeds = static_cast<double>(req.seeds.size());
  std::string csv = "row";
  for (double p : req.percents) {
    char col[32];
    std::snprintf(col, sizeof col, ",percent_%.10g", p);
    csv += col;
  }
  csv += '\n';
  std::string txt;
  for (size_t r = 0; r < rows.size(); ++r) {
    csv += rows[r].first;
    txt += rows[r].first;
    txt.append(rows[r].first.size() < 12 ? 12 - rows[r].first.size() : 1, ' ');
    for (size_t p = 0; p < req.percents.size(); ++p) {
      const double mean = acc[r][p] / nseeds;
      csv += "," + fmt6(mean);
      txt += " " + fmt6(mean);
    }
    csv += '\n';
    txt += '\n';
  }
  write_text((fs::path(out_dir) / "table.csv").string(), csv);
  write_text((fs::path(out_dir) / "table.txt").string(), txt);

  std::string hashes;
  append_hash(hashes, out_dir, (fs::path(out_dir) / "config.ini").string());
  append_hash(hashes, out_dir, (fs::path(out_dir) / "table.csv").string());
  append_hash(hashes, out_dir, (fs::path(out_dir) / "table.txt").string());
  write_text((fs::path(out_dir) / "hashes.txt").string(), hashes);
  return csv;
}

}  // namespace mavgram
