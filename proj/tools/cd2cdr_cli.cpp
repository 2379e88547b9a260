// Command-line front end: data generation, the three training phases, evaluation,
// full pipeline runs and sensitivity sweeps.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cd2cdr/config.hpp"
#include "cd2cdr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cd2cdr;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string out = "out";
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file (fields not given keep their defaults)");
  cmd->add_option("--seed", f.seed, "Base seed, overrides the config");
  cmd->add_option("--variant", f.variant, "full | cross | single | coarse | cycle");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_flag("--force", f.force, "Overwrite existing outputs");
  cmd->add_flag("-q,--quiet", f.quiet, "Only log warnings and errors");
}

// --config wins; otherwise a config.json left in --out by an earlier stage; otherwise defaults.
PipelineConfig resolve_config(const CommonFlags& f) {
  PipelineConfig cfg;
  if (!f.config.empty()) {
    cfg = load_config(f.config);
  } else if (fs::exists(fs::path(f.out) / "config.json")) {
    cfg = load_config(fs::path(f.out) / "config.json");
    spdlog::info("using {}", (fs::path(f.out) / "config.json").string());
  }
  if (f.seed) cfg.seed = *f.seed;
  if (!f.variant.empty()) cfg.variant = variant_from_string(f.variant);
  cfg.validate();
  return cfg;
}

int run_stages(const CommonFlags& f, Stage resume_after, Stage stop_after) {
  const PipelineConfig cfg = resolve_config(f);
  RunOptions opt;
  opt.out = f.out;
  opt.force = f.force;
  opt.resume_after = resume_after;
  opt.stop_after = stop_after;
  const RunOutcome r = run_pipeline(cfg, opt);
  if (r.report) std::cout << r.report->to_table();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-target cross-domain recommendation with confounder disentanglement and backdoor adjustment"};
  app.require_subcommand(1);

  CommonFlags gen_f, pre_f, dis_f, train_f, eval_f, pipe_f, sweep_f;
  bool confounder_free = false;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dual-domain dataset with planted confounders");
  add_common(gen, gen_f);
  gen->add_flag("--confounder-free", confounder_free, "Set both confounder weights to 0 (control dataset)");

  auto* pre = app.add_subcommand("pretrain", "Phase 1: backbone pretraining");
  add_common(pre, pre_f);
  auto* dis = app.add_subcommand("disentangle", "Phase 2: SDC/CDC extraction and confounder subspaces");
  add_common(dis, dis_f);
  auto* train = app.add_subcommand("train", "Phase 3: backdoor-adjusted fine-tuning");
  add_common(train, train_f);
  auto* ev = app.add_subcommand("evaluate", "Leave-one-out HR@K / NDCG@K of the phase-3 checkpoint");
  add_common(ev, eval_f);

  int resume_from = 0;
  auto* pipe = app.add_subcommand("pipeline", "All phases followed by evaluation");
  add_common(pipe, pipe_f);
  pipe->add_option("--resume-from", resume_from, "Continue after the checkpoint of phase 1, 2 or 3")
      ->check(CLI::Range(0, 3));

  std::string param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "One pipeline per value of J, lambda or alpha");
  add_common(sweep, sweep_f);
  sweep->add_option("--param", param, "J | lambda | alpha")->required();
  sweep->add_option("--values", values, "Values to run (default: the preset grid)");

  CLI11_PARSE(app, argc, argv);

  auto quiet = [](const CommonFlags& f) {
    if (f.quiet) spdlog::set_level(spdlog::level::warn);
  };
  try {
    if (*gen) {
      quiet(gen_f);
      PipelineConfig cfg = gen_f.config.empty() ? PipelineConfig{} : load_config(gen_f.config);
      if (gen_f.seed) cfg.seed = *gen_f.seed;
      if (confounder_free) cfg.data.synthetic.beta_sd = cfg.data.synthetic.beta_cd = 0.0;
      cmd_gen(cfg, gen_f.out, gen_f.force);
      std::cout << "wrote " << gen_f.out << "\n";
      return 0;
    }
    if (*pre) return quiet(pre_f), run_stages(pre_f, Stage::kNone, Stage::kPretrain);
    if (*dis) return quiet(dis_f), run_stages(dis_f, Stage::kPretrain, Stage::kDisentangle);
    if (*train) return quiet(train_f), run_stages(train_f, Stage::kDisentangle, Stage::kTrain);
    if (*ev) return quiet(eval_f), run_stages(eval_f, Stage::kTrain, Stage::kEvaluate);
    if (*pipe) return quiet(pipe_f), run_stages(pipe_f, static_cast<Stage>(resume_from), Stage::kEvaluate);
    if (*sweep) {
      quiet(sweep_f);
      const PipelineConfig cfg = resolve_config(sweep_f);
      const SweepParam p = sweep_param_from_string(param);
      if (values.empty()) values = sweep_preset(p);
      const auto entries = run_sweep(cfg, p, values, sweep_f.out, sweep_f.force);
      const std::string csv = sweep_csv(cfg, p, entries, cfg.top_k);
      const fs::path path = fs::path(sweep_f.out) / ("sweep_" + std::string(to_string(p)) + ".csv");
      std::ofstream(path) << csv;
      std::cout << csv;
      int failed = 0;
      for (const auto& e : entries) failed += e.report ? 0 : 1;
      if (failed > 0) {
        spdlog::error("{} of {} sweep values failed", failed, entries.size());
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
