#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cd2cdr/graph.hpp"
#include "cd2cdr/mlp.hpp"
#include "cd2cdr/split.hpp"

namespace cd2cdr {

enum class EmbeddingSource { kLearnableId, kFromFeatures };

// Initial embeddings of one domain: either a learnable table or a linear map applied
// to fixed raw features.
struct EmbeddingBlock {
  EmbeddingSource source = EmbeddingSource::kLearnableId;
  Mat table;                    // rows x d when learnable
  Mat map;                      // d_raw x d when from features
  std::optional<Mat> features;  // rows x d_raw, not trained

  std::size_t rows() const;
  Mat embed() const;
};

// E_vd = E_vr W_rd, raw features n x d_raw mapped to n x d.
Mat encode_items(const Mat& raw, const Mat& w_rd);

// eta * a + (1 - eta) * b
Mat augment_interpolate(const Mat& a, const Mat& b, double eta);

struct BackboneParams {
  std::array<EmbeddingBlock, 2> users;
  std::array<EmbeddingBlock, 2> items;
  // Linear heads shared by both domains: x P.
  Mat head_shared;
  Mat head_specific;
  Mat head_independent;
  MlpParams classifier;  // d -> d (tanh) -> 1 logit
  // Attention: logit_k = Z_k . query + bias_k over {shared, specific, independent}.
  Mat attn_query;  // 1 x d
  Mat attn_bias;   // 1 x 3
  int depth = 2;
  double eta = 0.5;
  Domain sparser = Domain::kB;

  std::size_t dim() const { return head_shared.rows(); }
  ParamList params();
};

struct BackboneInit {
  int dim = 64;
  int depth = 2;
  double eta = 0.5;
  double embed_stddev = 0.01;
  double head_noise = 0.0;  // heads start at identity (+ optional noise)
  double classifier_stddev = 0.1;
};

struct DomainGraphs {
  InteractionGraph a;
  InteractionGraph b;
  Domain sparser = Domain::kB;

  const InteractionGraph& domain(Domain d) const { return d == Domain::kA ? a : b; }
};

DomainGraphs build_graphs(const LeaveOneOutSplit& split);

BackboneParams init_backbone(const DualDomainDataset& ds, const DomainGraphs& graphs,
                             const BackboneInit& init, std::uint64_t seed);

// Disentangled and fused preferences.
struct PreferenceBundle {
  Mat z_shared;                      // m x d
  std::array<Mat, 2> z_specific;     // per domain, m x d
  std::array<Mat, 2> z_independent;  // per domain, m x d
  std::array<Mat, 2> user_pref;      // fused E_u*, m x d
  std::array<Mat, 2> item_emb;       // E_v, n x d
  std::array<Mat, 2> attention;      // m x 3 rows of softmax weights

  const Mat& specific(Domain d) const { return z_specific[static_cast<int>(d)]; }
  const Mat& independent(Domain d) const { return z_independent[static_cast<int>(d)]; }
  const Mat& users(Domain d) const { return user_pref[static_cast<int>(d)]; }
  const Mat& items(Domain d) const { return item_emb[static_cast<int>(d)]; }
  std::size_t num_users() const { return z_shared.rows(); }
};

struct Components {
  std::array<Mat, 2> shared;  // per-domain shared projections
  Mat z_shared;               // their mean
  std::array<Mat, 2> specific;
  std::array<Mat, 2> independent;
};

// Heads applied to the disentangler input of each domain.
Components disentangle(const std::array<Mat, 2>& inputs, const BackboneParams& p);

struct Fused {
  Mat pref;     // m x d
  Mat weights;  // m x 3
};

Fused fuse(const Mat& shared, const Mat& specific, const Mat& independent, const Mat& query,
           const Mat& bias);

// Everything the backward pass needs.
struct BackboneForward {
  std::array<Mat, 2> coarse_users;
  std::array<Mat, 2> inputs;
  Components comps;
  PreferenceBundle bundle;
};

BackboneForward backbone_forward(const BackboneParams& p, const DomainGraphs& graphs);

// Upstream gradients into the bundle; empty matrices mean zero.
struct BundleGrads {
  std::array<Mat, 2> user_pref;
  std::array<Mat, 2> item_emb;
  std::array<Mat, 2> specific;
  std::array<Mat, 2> shared_per_domain;
};

// Gradients aligned with BackboneParams::params(). The classifier entries are left zero.
Grads backbone_backward(const BackboneParams& p, const DomainGraphs& graphs,
                        const BackboneForward& fwd, const BundleGrads& up);

struct DisentangleWeights {
  double classify = 1.0;
  double confuse = 1.0;
  double orthogonal = 0.1;
};

struct DisentangleLoss {
  double classify = 0.0;  // domain cross-entropy on specific rows
  double confuse = 0.0;   // uniform-target cross-entropy on shared rows
  double orthogonal = 0.0;
  double accuracy = 0.0;  // classifier accuracy on specific rows
  double total(const DisentangleWeights& w) const {
    return w.classify * classify + w.confuse * confuse + w.orthogonal * orthogonal;
  }
};

/// Evaluates the disentanglement terms. With non-null outputs, adds weighted gradients
/// into `up` (specific / shared_per_domain) and the classifier gradients into
/// `classifier_grads` (aligned with classifier.params()).
DisentangleLoss disentangle_loss(const BackboneParams& p, const Components& c,
                                 const DisentangleWeights& w, BundleGrads* up,
                                 Grads* classifier_grads);

// Sampled-negative cross-entropy on sigma(<E_u*, E_v>) for one domain. Adds mean-scaled
// gradients into the bundle grads when `up` is non-null.
double dot_bce_loss(const PreferenceBundle& b, Domain d, std::span<const int> users,
                    std::span<const int> items, std::span<const double> labels, BundleGrads* up);

struct PretrainConfig {
  int epochs = 50;
  int batch_size = 1024;  // positives per step; each carries its k negatives
  double lr = 0.001;
  int train_negatives = kDefaultTrainNegatives;
  DisentangleWeights weights;
};

struct EpochLog {
  int epoch = 0;
  double rec_loss = 0.0;
  double disentangle_loss = 0.0;
  double classifier_accuracy = 0.0;
};

struct PretrainResult {
  BackboneParams params;
  PreferenceBundle bundle;
  std::vector<EpochLog> history;
};

// Total pretraining loss on fixed samples; used by the trainer and by gradient checks.
double pretrain_loss(const BackboneParams& p, const DomainGraphs& graphs,
                     const std::array<TrainingSamples, 2>& samples, std::span<const std::size_t> groups_a,
                     std::span<const std::size_t> groups_b, const DisentangleWeights& w, Grads* grads);

PretrainResult pretrain(const DualDomainDataset& ds, const LeaveOneOutSplit& split,
                        const BackboneInit& init, const PretrainConfig& cfg, std::uint64_t seed);

// Classifier accuracy on (Z_spe^A labelled 0, Z_spe^B labelled 1).
double classifier_accuracy(const MlpParams& classifier, const Mat& spec_a, const Mat& spec_b);

}  // namespace cd2cdr
