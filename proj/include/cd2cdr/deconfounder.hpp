#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "cd2cdr/backbone.hpp"
#include "cd2cdr/confounders.hpp"

namespace cd2cdr {

// Backdoor-adjusted interaction predictor.
struct PredictionNetwork {
  Mat w_u;   // d x d_sel
  Mat w_uc;  // d x d_sel
  Mat w_v;   // d x d_sel
  Mat w_vc;  // d x d_sel
  Mat w_fc;  // 3d x e, applied to (E_u* | E_v | mixture)
  MlpParams mlp;  // e -> 32 -> 16 -> q -> 1 logit

  std::size_t dim() const { return w_u.rows(); }
  ParamList params();
};

struct PredictionInit {
  int fusion_dim = 128;                // e
  std::vector<int> hidden{32, 16};
  int final_hidden = 8;                // q
  int selection_dim = 0;               // d_sel; 0 means d
  double stddev = 0.1;
};

PredictionNetwork init_prediction_network(std::size_t dim, const PredictionInit& init, std::uint64_t seed);

enum class MixtureNormalization { kLiteral, kRenormalized };

std::string_view to_string(MixtureNormalization n);
MixtureNormalization mixture_normalization_from_string(std::string_view s);

// Centroids of the active domain with a uniform prior p(c) = 1/|C|.
struct ConfounderContext {
  Mat centroids;  // |C| x d
  MixtureNormalization normalization = MixtureNormalization::kLiteral;

  double prior() const { return 1.0 / static_cast<double>(centroids.rows()); }
  // Weight applied on top of phi(c) inside the mixture sum.
  double mixture_scale() const { return normalization == MixtureNormalization::kLiteral ? prior() : 1.0; }
};

/// phi(c) = 1/2 softmax_c(<E_u* W_u, c W_uc>) + 1/2 softmax_c(<E_v W_v, c W_vc>), row-wise for
/// a batch of (user, item) rows. Throws std::invalid_argument when the context is empty.
Mat confounder_weights(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net);

// sum_c p(c) phi(c) c (literal) or sum_c phi(c) c (renormalized), one row per pair.
Mat backdoor_mixture(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net);

// Q_in = (E_u* | E_v | mixture) W_fc.
Mat backdoor_input(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net);

// sigma(MLP(Q_in)), one probability per row.
Mat predict(const Mat& q_in, const PredictionNetwork& net);

// How the third input block is formed.
enum class ScoringMode {
  kBackdoor,  // selection-weighted mixture over centroids
  kCoarse,    // one fixed mean-candidate vector for every pair
};

struct ScoringContext {
  ScoringMode mode = ScoringMode::kBackdoor;
  ConfounderContext backdoor;
  Mat coarse;  // 1 x d
};

struct ScoreCache {
  Mat users, items;
  Mat user_sel, item_sel;          // E W_u, E W_v
  Mat centroid_user, centroid_item;  // C W_uc, C W_vc
  Mat soft_user, soft_item;        // row softmaxes
  Mat input;                       // (E_u* | E_v | mixture)
  Mat q_in;
  MlpCache mlp;
};

// Pre-sigmoid scores for a batch of pairs.
Mat score_logits(const Mat& users, const Mat& items, const ScoringContext& ctx, const PredictionNetwork& net,
                 ScoreCache* cache = nullptr);

struct ScoreGrads {
  Grads net;  // aligned with PredictionNetwork::params()
  Mat users;
  Mat items;
};

ScoreGrads score_backward(const ScoringContext& ctx, const PredictionNetwork& net, const ScoreCache& cache,
                          const Mat& d_logits);

// Mean binary cross-entropy of logits against 0/1 labels; gradient written when non-null.
double bce_with_logits(const Mat& logits, std::span<const double> labels, Mat* d_logits);

struct FinetuneConfig {
  int epochs = 20;
  int batch_size = 1024;
  double lr = 0.001;
  int train_negatives = kDefaultTrainNegatives;
};

struct DeconfoundedModel {
  BackboneParams backbone;
  PredictionNetwork net;
  std::array<ScoringContext, 2> contexts;

  const ScoringContext& context(Domain d) const { return contexts[static_cast<int>(d)]; }
};

std::array<ScoringContext, 2> make_contexts(const ConfounderSubspace& s, Variant v, MixtureNormalization n);

// Phase-3 objective on fixed batches (groups index positives as in pretraining).
double finetune_loss(DeconfoundedModel& model, const DomainGraphs& graphs, const std::array<TrainingSamples, 2>& samples,
                     std::span<const std::size_t> groups_a, std::span<const std::size_t> groups_b, Grads* grads);

// Backbone parameters excluding the domain classifier, followed by the prediction network.
ParamList finetune_params(DeconfoundedModel& model);

struct FinetuneResult {
  std::vector<double> loss_history;  // mean loss per epoch
};

FinetuneResult finetune(DeconfoundedModel& model, const LeaveOneOutSplit& split, const FinetuneConfig& cfg,
                        std::uint64_t seed);

// Scores for (user, candidate items) in one domain from a frozen bundle.
void score_candidates(const DeconfoundedModel& model, const PreferenceBundle& bundle, Domain d, int user,
                      std::span<const int> items, std::span<double> out);

}  // namespace cd2cdr
