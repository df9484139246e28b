#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mavgram/arcface.hpp"
#include "mavgram/config.hpp"
#include "mavgram/features.hpp"
#include "mavgram/optim.hpp"
#include "mavgram/runner.hpp"
#include "mavgram/synth.hpp"
#include "mavgram/train.hpp"
#include "mavgram/waveform.hpp"

namespace py = pybind11;
using namespace mavgram;

namespace {

TrainConfig make_config(const std::string& preset,
                        const std::map<std::string, std::string>& overrides,
                        uint64_t seed) {
  TrainConfig cfg = config_from_preset(preset);
  for (const auto& [key, value] : overrides) apply_config_kv(cfg, key, value);
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

Waveform make_waveform(const std::vector<float>& samples, double rate) {
  Waveform w;
  w.samples = samples;
  w.rate = rate;
  return w;
}

std::vector<std::vector<float>> grid_rows(const FeatureMap& map) {
  std::vector<std::vector<float>> rows(map.mels);
  for (int m = 0; m < map.mels; ++m) {
    rows[m].resize(map.frames);
    for (int t = 0; t < map.frames; ++t) rows[m][t] = map.at(0, m, t);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Acoustic-vibration fusion fault-diagnosis pipeline";

  m.def(
      "speed_grid",
      [](int n, double s) { return speed_grid(n, s).factors; },
      py::arg("n"), py::arg("s"),
      "Symmetric speed-perturbation factor grid {1 + k*s}.");

  m.def("virtual_label", &virtual_label, py::arg("base_label"),
        py::arg("speed_index"), py::arg("n"));
  m.def("base_from_virtual", &base_from_virtual, py::arg("virtual_id"),
        py::arg("n"));

  m.def(
      "lr_at",
      [](double base_lr, double min_lr, int total_epochs, int epoch) {
        return lr_at(LrSchedule{base_lr, min_lr, total_epochs}, epoch);
      },
      py::arg("base_lr"), py::arg("min_lr"), py::arg("total_epochs"),
      py::arg("epoch"), "Cosine-annealing learning rate at an epoch.");

  m.def("cross_entropy", &cross_entropy, py::arg("logits"), py::arg("target"),
        "Stabilized softmax cross-entropy of one logit row.");

  m.def(
      "minmax_normalize",
      [](const std::vector<float>& samples, double rate) {
        return minmax_normalize(make_waveform(samples, rate)).samples;
      },
      py::arg("samples"), py::arg("rate") = 1.0);

  m.def(
      "resample",
      [](const std::vector<float>& samples, double rate, double to_rate) {
        return resample(make_waveform(samples, rate), to_rate).samples;
      },
      py::arg("samples"), py::arg("rate"), py::arg("to_rate"));

  m.def(
      "speed_perturb",
      [](const std::vector<float>& samples, double rate, double factor) {
        return speed_perturb(make_waveform(samples, rate), factor).samples;
      },
      py::arg("samples"), py::arg("rate"), py::arg("factor"));

  m.def(
      "log_mel",
      [](const std::vector<float>& samples, const std::string& preset,
         const std::map<std::string, std::string>& overrides) {
        const TrainConfig cfg = make_config(preset, overrides, 1);
        Waveform w = make_waveform(samples, cfg.features.rate);
        w.samples = fit_length(w.samples, static_cast<size_t>(cfg.features.samples()));
        return grid_rows(log_mel(w, cfg.features.stft, cfg.features.mel));
      },
      py::arg("samples"), py::arg("preset") = "desk",
      py::arg("overrides") = std::map<std::string, std::string>{},
      "Log-mel map (rows = mel bins) of a signal at the preset's rate.");

  m.def(
      "config_hash",
      [](const std::string& preset,
         const std::map<std::string, std::string>& overrides) {
        return config_hash(make_config(preset, overrides, 1));
      },
      py::arg("preset") = "desk",
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def("synth_dataset",
        [](const std::string& profile, int classes, int per_class, uint64_t seed,
           const std::string& out_dir, bool force) {
          return run_synth(profile, classes, per_class, seed, out_dir, force);
        },
        py::arg("profile"), py::arg("classes"), py::arg("per_class"),
        py::arg("seed"), py::arg("out_dir"), py::arg("force") = false);

  m.def(
      "pretrain",
      [](const std::string& manifest, const std::string& out_dir,
         const std::string& preset, const std::map<std::string, std::string>& overrides,
         uint64_t seed, bool force) {
        const RunSummary s =
            run_pretrain(make_config(preset, overrides, seed), manifest, out_dir,
                         force, false);
        return py::make_tuple(s.checkpoint_path, s.final_loss);
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("preset") = "desk",
      py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("seed") = 1, py::arg("force") = false);

  m.def(
      "finetune",
      [](const std::string& ckpt, const std::string& manifest,
         const std::string& out_dir, double percent, const std::string& preset,
         const std::map<std::string, std::string>& overrides, uint64_t seed,
         bool force) {
        const RunSummary s =
            run_finetune(make_config(preset, overrides, seed), ckpt, manifest,
                         percent, out_dir, force, false);
        return py::make_tuple(s.checkpoint_path, s.macro_accuracy);
      },
      py::arg("ckpt"), py::arg("manifest"), py::arg("out_dir"),
      py::arg("percent") = 15.0, py::arg("preset") = "desk",
      py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("seed") = 1, py::arg("force") = false);

  m.def(
      "evaluate",
      [](const std::string& ckpt, const std::string& manifest,
         const std::string& out_dir, const std::string& preset,
         const std::map<std::string, std::string>& overrides, uint64_t seed,
         bool force) {
        const RunSummary s = run_eval(make_config(preset, overrides, seed), ckpt,
                                      manifest, out_dir, force, false);
        return s.macro_accuracy;
      },
      py::arg("ckpt"), py::arg("manifest"), py::arg("out_dir"),
      py::arg("preset") = "desk",
      py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("seed") = 1, py::arg("force") = false);
}
