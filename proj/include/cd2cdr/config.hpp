#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cd2cdr/backbone.hpp"
#include "cd2cdr/confounders.hpp"
#include "cd2cdr/deconfounder.hpp"
#include "cd2cdr/synthetic.hpp"

namespace cd2cdr {

enum class DataSource { kSynthetic, kTsv };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  std::string tsv_a;
  std::string tsv_b;
  std::string item_features_a;  // optional feature files
  std::string item_features_b;
  int min_interactions = 5;
  SyntheticConfig synthetic;
};

// Every knob of one experiment. Defaults are the reference settings; JSON files may
// override any subset of fields.
struct PipelineConfig {
  DataConfig data;
  int dim = 64;
  int depth = 2;
  double eta = 0.5;
  int epochs_pretrain = 50;
  int epochs_adversarial = 30;
  int epochs_finetune = 20;
  int batch_size = 1024;
  double lr = 0.001;
  std::vector<double> lr_grid{0.01, 0.005, 0.001, 0.0005, 0.0001};
  int j_sd_a = 10;
  int j_sd_b = 10;
  int j_cd = 10;
  double lambda = 1.0;
  double alpha = 1.0;
  int train_negatives = 7;
  int eval_negatives = 999;
  int top_k = 10;
  std::uint64_t seed = 2024;
  MixtureNormalization mixture = MixtureNormalization::kLiteral;
  Variant variant = Variant::kFull;
  // Prediction network e -> hidden... -> q -> 1.
  int fusion_dim = 128;
  std::vector<int> prediction_hidden{32, 16};
  int final_hidden = 8;
  int selection_dim = 0;  // 0: same as dim
  // Adversarial phase optimisation (architecture and schedule knobs).
  int adversarial_batch_size = 1;
  double adversarial_lr = 0.003;
  double adversarial_final_lr_fraction = 0.02;
  AdversarialInit adversarial_init;
  DisentangleWeights disentangle;
  double embed_stddev = 0.01;

  BackboneInit backbone_init() const;
  PretrainConfig pretrain_config() const;
  AdversarialConfig adversarial_config() const;  // lambda = 0 for the cycle variant
  FinetuneConfig finetune_config() const;
  PredictionInit prediction_init() const;
  SubspaceSizes subspace_sizes() const;

  // Throws std::invalid_argument on non-positive counts or out-of-range values.
  void validate() const;
};

std::string to_json(const PipelineConfig& c);
// Fields missing from the JSON keep the defaults of `base`.
PipelineConfig config_from_json(const std::string& text, const PipelineConfig& base = {});
PipelineConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& c);

}  // namespace cd2cdr
