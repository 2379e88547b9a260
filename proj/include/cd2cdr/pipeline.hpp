#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cd2cdr/backbone.hpp"
#include "cd2cdr/checkpoint.hpp"
#include "cd2cdr/config.hpp"
#include "cd2cdr/metrics.hpp"
#include "cd2cdr/synthetic.hpp"

namespace cd2cdr {

struct PreparedData {
  DualDomainDataset dataset;
  LeaveOneOutSplit split;
  DomainGraphs graphs;
};

// Synthetic generation or TSV loading, user alignment, leave-one-out split.
PreparedData prepare_data(const PipelineConfig& cfg);

// Stages in execution order. Phases 1-3 end with a checkpoint.
enum class Stage : int { kNone = 0, kPretrain = 1, kDisentangle = 2, kTrain = 3, kEvaluate = 4 };

std::string_view stage_name(Stage s);

// Hash of the configuration fields that influence the given phase's checkpoint. Phase 1
// ignores the variant and every later-phase knob, so one pretrained backbone can feed
// several variants.
std::string phase_config_hash(const PipelineConfig& cfg, Stage phase);

std::filesystem::path checkpoint_dir(const std::filesystem::path& out, Stage phase);

struct RunOptions {
  std::filesystem::path out;
  Stage resume_after = Stage::kNone;  // load this phase's checkpoint and continue
  Stage stop_after = Stage::kEvaluate;
  bool force = false;                 // allow replacing existing checkpoints and reports
};

struct RunOutcome {
  std::optional<MetricsReport> report;  // set when evaluation ran
  // Wall-clock seconds per stage, every key always present (0 when skipped).
  std::vector<std::pair<std::string, double>> timings;
};

/// Runs the requested stages. A failing stage leaves the checkpoints of earlier stages in
/// place and propagates the exception. Writes config.json, checkpoints/phaseN/, and after
/// evaluation report.json, report.txt, metrics.csv and timings.json.
RunOutcome run_pipeline(const PipelineConfig& cfg, const RunOptions& opt);

enum class SweepParam { kJ, kLambda, kAlpha };

std::string_view to_string(SweepParam p);
SweepParam sweep_param_from_string(std::string_view s);
std::vector<double> sweep_preset(SweepParam p);
// Config with the swept value applied (J sets all three subspace sizes).
PipelineConfig with_sweep_value(PipelineConfig cfg, SweepParam p, double value);

struct SweepEntry {
  double value = 0.0;
  std::optional<MetricsReport> report;
  std::string error;  // set when the run failed
};

/// One pipeline per value in out/<param>_<value>/, shared base seed. The phase-1
/// checkpoint of the first successful run is reused by later values. Failures are
/// recorded and the sweep moves on.
std::vector<SweepEntry> run_sweep(const PipelineConfig& cfg, SweepParam p, const std::vector<double>& values,
                                  const std::filesystem::path& out, bool force);

// Header plus |values| x 2 domains x 2 metrics rows.
std::string sweep_csv(const PipelineConfig& cfg, SweepParam p, const std::vector<SweepEntry>& entries, int k);

/// Writes A.tsv, B.tsv (plus feature files when present), ground_truth.json and the
/// ground_truth/ matrices. Refuses to overwrite existing files unless `force`.
SyntheticData cmd_gen(const PipelineConfig& cfg, const std::filesystem::path& out, bool force);

}  // namespace cd2cdr
