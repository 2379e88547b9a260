#include "cd2cdr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string_view>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

using Json = nlohmann::ordered_json;

BackboneInit PipelineConfig::backbone_init() const {
  BackboneInit b;
  b.dim = dim;
  b.depth = depth;
  b.eta = eta;
  b.embed_stddev = embed_stddev;
  return b;
}

PretrainConfig PipelineConfig::pretrain_config() const {
  PretrainConfig p;
  p.epochs = epochs_pretrain;
  p.batch_size = batch_size;
  p.lr = lr;
  p.train_negatives = train_negatives;
  p.weights = disentangle;
  return p;
}

AdversarialConfig PipelineConfig::adversarial_config() const {
  AdversarialConfig a;
  a.epochs = epochs_adversarial;
  a.batch_size = adversarial_batch_size;
  a.lr = adversarial_lr;
  a.final_lr_fraction = adversarial_final_lr_fraction;
  a.lambda = variant == Variant::kCycle ? 0.0 : lambda;
  a.init = adversarial_init;
  return a;
}

FinetuneConfig PipelineConfig::finetune_config() const {
  FinetuneConfig f;
  f.epochs = epochs_finetune;
  f.batch_size = batch_size;
  f.lr = lr;
  f.train_negatives = train_negatives;
  return f;
}

PredictionInit PipelineConfig::prediction_init() const {
  PredictionInit p;
  p.fusion_dim = fusion_dim;
  p.hidden = prediction_hidden;
  p.final_hidden = final_hidden;
  p.selection_dim = selection_dim;
  return p;
}

SubspaceSizes PipelineConfig::subspace_sizes() const { return {j_sd_a, j_sd_b, j_cd}; }

void PipelineConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(fmt::format("config: {} must be >= 1 (got {})", name, v));
  };
  positive(dim, "dim");
  positive(batch_size, "batch_size");
  positive(adversarial_batch_size, "adversarial.batch_size");
  positive(j_sd_a, "j_sd_a");
  positive(j_sd_b, "j_sd_b");
  positive(j_cd, "j_cd");
  positive(train_negatives, "train_negatives");
  positive(eval_negatives, "eval_negatives");
  positive(top_k, "top_k");
  positive(fusion_dim, "fusion_dim");
  positive(final_hidden, "final_hidden");
  if (depth < 0) throw std::invalid_argument("config: depth must be >= 0");
  if (epochs_pretrain < 0 || epochs_adversarial < 0 || epochs_finetune < 0) {
    throw std::invalid_argument("config: epochs must be >= 0");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("config: eta must be in [0, 1]");
  if (!(lr > 0.0) || !(adversarial_lr > 0.0)) throw std::invalid_argument("config: learning rates must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("config: lambda must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be > 0");
  if (data.source == DataSource::kTsv && (data.tsv_a.empty() || data.tsv_b.empty())) {
    throw std::invalid_argument("config: tsv source needs data.tsv_a and data.tsv_b");
  }
}

namespace {

Json synthetic_json(const SyntheticConfig& s) {
  return Json{{"users", s.users},
              {"items_a", s.items_a},
              {"items_b", s.items_b},
              {"latent_dim", s.latent_dim},
              {"sdc_a", s.sdc_a},
              {"sdc_b", s.sdc_b},
              {"cdc", s.cdc},
              {"beta_sd", s.beta_sd},
              {"beta_cd", s.beta_cd},
              {"density_a", s.density_a},
              {"density_b", s.density_b},
              {"user_exposure_rate", s.user_exposure_rate},
              {"item_exposure_rate", s.item_exposure_rate},
              {"preference_scale", s.preference_scale},
              {"shared_fraction", s.shared_fraction},
              {"min_user_interactions", s.min_user_interactions}};
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(fmt::format("config: field '{}' has the wrong type ({})", key, e.what()));
  }
}

// A misspelt key would otherwise fall back to its default without a word.
void require_known_keys(const Json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw std::invalid_argument(fmt::format("config: {} must be an object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(fmt::format("config: unknown field '{}' in {}", key, where));
    }
  }
}

void read_synthetic(const Json& j, SyntheticConfig& s) {
  require_known_keys(j,
                     {"users", "items_a", "items_b", "latent_dim", "sdc_a", "sdc_b", "cdc", "beta_sd", "beta_cd",
                      "density_a", "density_b", "user_exposure_rate", "item_exposure_rate", "preference_scale",
                      "shared_fraction", "min_user_interactions"},
                     "data.synthetic");
  read(j, "users", s.users);
  read(j, "items_a", s.items_a);
  read(j, "items_b", s.items_b);
  read(j, "latent_dim", s.latent_dim);
  read(j, "sdc_a", s.sdc_a);
  read(j, "sdc_b", s.sdc_b);
  read(j, "cdc", s.cdc);
  read(j, "beta_sd", s.beta_sd);
  read(j, "beta_cd", s.beta_cd);
  read(j, "density_a", s.density_a);
  read(j, "density_b", s.density_b);
  read(j, "user_exposure_rate", s.user_exposure_rate);
  read(j, "item_exposure_rate", s.item_exposure_rate);
  read(j, "preference_scale", s.preference_scale);
  read(j, "shared_fraction", s.shared_fraction);
  read(j, "min_user_interactions", s.min_user_interactions);
}

}  // namespace

std::string to_json(const PipelineConfig& c) {
  Json j;
  j["data"] = {{"source", c.data.source == DataSource::kSynthetic ? "synthetic" : "tsv"},
               {"tsv_a", c.data.tsv_a},
               {"tsv_b", c.data.tsv_b},
               {"item_features_a", c.data.item_features_a},
               {"item_features_b", c.data.item_features_b},
               {"min_interactions", c.data.min_interactions},
               {"synthetic", synthetic_json(c.data.synthetic)}};
  j["dim"] = c.dim;
  j["depth"] = c.depth;
  j["eta"] = c.eta;
  j["epochs"] = {{"pretrain", c.epochs_pretrain}, {"adversarial", c.epochs_adversarial}, {"finetune", c.epochs_finetune}};
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["lr_grid"] = c.lr_grid;
  j["j_sd_a"] = c.j_sd_a;
  j["j_sd_b"] = c.j_sd_b;
  j["j_cd"] = c.j_cd;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["train_negatives"] = c.train_negatives;
  j["eval_negatives"] = c.eval_negatives;
  j["top_k"] = c.top_k;
  j["seed"] = c.seed;
  j["mixture_normalization"] = std::string(to_string(c.mixture));
  j["variant"] = std::string(to_string(c.variant));
  j["prediction"] = {{"fusion_dim", c.fusion_dim},
                     {"hidden", c.prediction_hidden},
                     {"final_hidden", c.final_hidden},
                     {"selection_dim", c.selection_dim}};
  j["adversarial"] = {{"batch_size", c.adversarial_batch_size},
                      {"lr", c.adversarial_lr},
                      {"final_lr_fraction", c.adversarial_final_lr_fraction},
                      {"generator_gain", c.adversarial_init.generator_gain},
                      {"generator_input_scale", c.adversarial_init.generator_input_scale},
                      {"generator_noise", c.adversarial_init.generator_noise},
                      {"discriminator_hidden", c.adversarial_init.discriminator_hidden},
                      {"discriminator_stddev", c.adversarial_init.discriminator_stddev}};
  j["disentangle"] = {{"classify", c.disentangle.classify},
                      {"confuse", c.disentangle.confuse},
                      {"orthogonal", c.disentangle.orthogonal}};
  j["embed_stddev"] = c.embed_stddev;
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text, const PipelineConfig& base) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  require_known_keys(j,
                     {"data", "dim", "depth", "eta", "epochs", "batch_size", "lr", "lr_grid", "j_sd_a", "j_sd_b",
                      "j_cd", "lambda", "alpha", "train_negatives", "eval_negatives", "top_k", "seed",
                      "mixture_normalization", "variant", "prediction", "adversarial", "disentangle",
                      "embed_stddev"},
                     "the top level");
  PipelineConfig c = base;
  if (j.contains("data")) {
    const Json& d = j["data"];
    require_known_keys(d,
                       {"source", "tsv_a", "tsv_b", "item_features_a", "item_features_b", "min_interactions",
                        "synthetic"},
                       "data");
    if (d.contains("source")) {
      const auto s = d["source"].get<std::string>();
      if (s == "synthetic") {
        c.data.source = DataSource::kSynthetic;
      } else if (s == "tsv") {
        c.data.source = DataSource::kTsv;
      } else {
        throw std::invalid_argument("config: data.source must be 'synthetic' or 'tsv'");
      }
    }
    read(d, "tsv_a", c.data.tsv_a);
    read(d, "tsv_b", c.data.tsv_b);
    read(d, "item_features_a", c.data.item_features_a);
    read(d, "item_features_b", c.data.item_features_b);
    read(d, "min_interactions", c.data.min_interactions);
    if (d.contains("synthetic")) read_synthetic(d["synthetic"], c.data.synthetic);
  }
  read(j, "dim", c.dim);
  read(j, "depth", c.depth);
  read(j, "eta", c.eta);
  if (j.contains("epochs")) {
    require_known_keys(j["epochs"], {"pretrain", "adversarial", "finetune"}, "epochs");
    read(j["epochs"], "pretrain", c.epochs_pretrain);
    read(j["epochs"], "adversarial", c.epochs_adversarial);
    read(j["epochs"], "finetune", c.epochs_finetune);
  }
  read(j, "batch_size", c.batch_size);
  read(j, "lr", c.lr);
  read(j, "lr_grid", c.lr_grid);
  read(j, "j_sd_a", c.j_sd_a);
  read(j, "j_sd_b", c.j_sd_b);
  read(j, "j_cd", c.j_cd);
  read(j, "lambda", c.lambda);
  read(j, "alpha", c.alpha);
  read(j, "train_negatives", c.train_negatives);
  read(j, "eval_negatives", c.eval_negatives);
  read(j, "top_k", c.top_k);
  read(j, "seed", c.seed);
  if (j.contains("mixture_normalization")) {
    c.mixture = mixture_normalization_from_string(j["mixture_normalization"].get<std::string>());
  }
  if (j.contains("variant")) c.variant = variant_from_string(j["variant"].get<std::string>());
  if (j.contains("prediction")) {
    const Json& p = j["prediction"];
    require_known_keys(p, {"fusion_dim", "hidden", "final_hidden", "selection_dim"}, "prediction");
    read(p, "fusion_dim", c.fusion_dim);
    read(p, "hidden", c.prediction_hidden);
    read(p, "final_hidden", c.final_hidden);
    read(p, "selection_dim", c.selection_dim);
  }
  if (j.contains("adversarial")) {
    const Json& a = j["adversarial"];
    require_known_keys(a,
                       {"batch_size", "lr", "final_lr_fraction", "generator_gain", "generator_input_scale",
                        "generator_noise", "discriminator_hidden", "discriminator_stddev"},
                       "adversarial");
    read(a, "batch_size", c.adversarial_batch_size);
    read(a, "lr", c.adversarial_lr);
    read(a, "final_lr_fraction", c.adversarial_final_lr_fraction);
    read(a, "generator_gain", c.adversarial_init.generator_gain);
    read(a, "generator_input_scale", c.adversarial_init.generator_input_scale);
    read(a, "generator_noise", c.adversarial_init.generator_noise);
    read(a, "discriminator_hidden", c.adversarial_init.discriminator_hidden);
    read(a, "discriminator_stddev", c.adversarial_init.discriminator_stddev);
  }
  if (j.contains("disentangle")) {
    require_known_keys(j["disentangle"], {"classify", "confuse", "orthogonal"}, "disentangle");
    read(j["disentangle"], "classify", c.disentangle.classify);
    read(j["disentangle"], "confuse", c.disentangle.confuse);
    read(j["disentangle"], "orthogonal", c.disentangle.orthogonal);
  }
  read(j, "embed_stddev", c.embed_stddev);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_hash(const PipelineConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace cd2cdr
