#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mavgram/runner.hpp"

namespace {

using namespace mavgram;

struct CommonOpts {
  std::string config_path;
  std::string preset = "desk";
  std::vector<std::string> sets;
  uint64_t seed = 0;
  bool seed_given = false;
  std::string variant;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file (INI-style)");
  cmd->add_option("--preset", o.preset, "Base preset: desk or canonical")
      ->check(CLI::IsMember({"desk", "canonical"}));
  cmd->add_option("--set", o.sets, "Override, e.g. --set train.epochs=5");
  cmd->add_option("--seed", o.seed, "Training/split seed")
      ->each([&](const std::string&) { o.seed_given = true; });
  cmd->add_option("--variant", o.variant, "Feature variant: MAV, ST, MV or AV");
  cmd->add_flag("--force", o.force, "Overwrite a non-empty output directory");
  cmd->add_flag("--quiet", o.quiet, "Suppress per-epoch progress");
}

TrainConfig effective_config(const CommonOpts& o) {
  TrainConfig cfg = config_from_preset(o.preset);
  if (!o.config_path.empty()) cfg = load_config_file(o.config_path, cfg);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects section.key=value, got '" + kv + "'");
    apply_config_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.variant.empty()) cfg.variant = variant_from_string(o.variant);
  if (o.seed_given) cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int workers_from_env() {
  const char* env = std::getenv("MAVGRAM_WORKERS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic-vibration fusion fault diagnosis pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic bearing dataset");
  std::string sy_profile = "source", sy_out;
  int sy_classes = 5, sy_per_class = 10;
  uint64_t sy_seed = 1;
  bool sy_force = false;
  synth->add_option("--profile", sy_profile, "source or target");
  synth->add_option("--classes", sy_classes, "Class count (1..5)");
  synth->add_option("--per-class", sy_per_class, "Samples per class")->required();
  synth->add_option("--seed", sy_seed, "Generator seed");
  synth->add_option("--out", sy_out, "Output directory")->required();
  synth->add_flag("--force", sy_force, "Overwrite a non-empty output directory");

  // featurize
  auto* feat = app.add_subcommand("featurize", "Dump a feature cache for a manifest");
  CommonOpts feat_o;
  std::string ft_manifest, ft_ckpt, ft_out;
  add_common(feat, feat_o);
  feat->add_option("--manifest", ft_manifest, "Dataset manifest")->required();
  feat->add_option("--ckpt", ft_ckpt, "Checkpoint supplying TgramNet weights");
  feat->add_option("--out", ft_out, "Output cache file")->required();

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Train on the source dataset");
  CommonOpts pre_o;
  std::string pre_manifest, pre_out;
  add_common(pre, pre_o);
  pre->add_option("--manifest", pre_manifest, "Source manifest")->required();
  pre->add_option("--out", pre_out, "Run directory")->required();

  // finetune
  auto* fin = app.add_subcommand("finetune", "Fine-tune a checkpoint on a target dataset");
  CommonOpts fin_o;
  std::string fin_manifest, fin_ckpt, fin_out;
  double fin_percent = 15.0;
  add_common(fin, fin_o);
  fin->add_option("--manifest", fin_manifest, "Target manifest")->required();
  fin->add_option("--ckpt", fin_ckpt, "Pretrained checkpoint")->required();
  fin->add_option("--percent", fin_percent, "Fine-tune share of the dataset (<= 25)")
      ->check(CLI::Range(0.0, 25.0).description("percent must lie in (0, 25]"));
  fin->add_option("--out", fin_out, "Run directory")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  CommonOpts ev_o;
  std::string ev_manifest, ev_ckpt, ev_out;
  add_common(ev, ev_o);
  ev->add_option("--manifest", ev_manifest, "Manifest (test-tagged records used)")
      ->required();
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint to evaluate")->required();
  ev->add_option("--out", ev_out, "Run directory")->required();

  // ablate
  auto* ab = app.add_subcommand("ablate", "Run the variant/percent/seed matrix");
  CommonOpts ab_o;
  std::string ab_source, ab_target, ab_out;
  std::string ab_variants = "MAV,ST,MV,AV", ab_percents = "25", ab_seeds = "1,2,3";
  std::string ab_grid;
  add_common(ab, ab_o);
  ab->add_option("--source", ab_source, "Source manifest (pretraining)")->required();
  ab->add_option("--target", ab_target, "Target manifest (fine-tuning)")->required();
  ab->add_option("--variants", ab_variants, "Comma list of feature variants");
  ab->add_option("--percents", ab_percents, "Comma list of fine-tune percents");
  ab->add_option("--seeds", ab_seeds, "Comma list of seeds");
  ab->add_option("--grid", ab_grid,
                 "Speed cells n:s (comma list) instead of feature variants");
  ab->add_option("--out", ab_out, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const int n = run_synth(sy_profile, sy_classes, sy_per_class, sy_seed, sy_out,
                              sy_force);
      std::cout << "wrote " << n << " records to " << sy_out << "\n";
    } else if (*feat) {
      const TrainConfig cfg = effective_config(feat_o);
      const int n = run_featurize(cfg, ft_manifest, ft_ckpt, ft_out);
      std::cout << "cached features for " << n << " records in " << ft_out << "\n";
    } else if (*pre) {
      const TrainConfig cfg = effective_config(pre_o);
      const RunSummary s =
          run_pretrain(cfg, pre_manifest, pre_out, pre_o.force, !pre_o.quiet);
      std::cout << "checkpoint: " << s.checkpoint_path << "\n";
    } else if (*fin) {
      if (!(fin_percent > 0.0))
        throw std::invalid_argument("--percent must be positive");
      const TrainConfig cfg = effective_config(fin_o);
      const RunSummary s = run_finetune(cfg, fin_ckpt, fin_manifest, fin_percent,
                                        fin_out, fin_o.force, !fin_o.quiet);
      std::cout << "checkpoint: " << s.checkpoint_path << "\n"
                << "report: " << s.report_path << "\n";
    } else if (*ev) {
      const TrainConfig cfg = effective_config(ev_o);
      const RunSummary s =
          run_eval(cfg, ev_ckpt, ev_manifest, ev_out, ev_o.force, !ev_o.quiet);
      std::cout << "report: " << s.report_path << "\n";
    } else if (*ab) {
      const TrainConfig cfg = effective_config(ab_o);
      AblateRequest req;
      if (ab_grid.empty()) {
        for (const auto& v : split_list(ab_variants))
          req.variants.push_back(variant_from_string(v));
      } else {
        req.variants.push_back(cfg.variant);
        for (const auto& cell : split_list(ab_grid)) {
          const auto colon = cell.find(':');
          if (colon == std::string::npos)
            throw std::invalid_argument("--grid cells take the form n:s, got '" +
                                        cell + "'");
          req.speed_cells.emplace_back(std::stoi(cell.substr(0, colon)),
                                       std::stod(cell.substr(colon + 1)));
        }
      }
      for (const auto& p : split_list(ab_percents)) {
        const double percent = std::stod(p);
        if (!(percent > 0.0) || percent > 25.0)
          throw std::invalid_argument("ablate percents must lie in (0, 25]");
        req.percents.push_back(percent);
      }
      for (const auto& s : split_list(ab_seeds))
        req.seeds.push_back(std::stoull(s));
      req.source_manifest = ab_source;
      req.target_manifest = ab_target;
      req.workers = workers_from_env();
      const std::string csv = run_ablate(cfg, req, ab_out, ab_o.force, !ab_o.quiet);
      std::cout << csv;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
