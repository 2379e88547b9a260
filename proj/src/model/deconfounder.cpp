#include "cd2cdr/deconfounder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cd2cdr/adam.hpp"
#include "cd2cdr/errors.hpp"

namespace cd2cdr {

namespace {

void softmax_rows(Mat& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
}

// dL/dlogits of a row softmax given dL/dprobs.
Mat softmax_rows_backward(const Mat& probs, const Mat& d_probs) {
  Mat out(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const double s = dot(probs.row(r), d_probs.row(r));
    for (std::size_t c = 0; c < probs.cols(); ++c) out(r, c) = probs(r, c) * (d_probs(r, c) - s);
  }
  return out;
}

void check_pairs(const Mat& users, const Mat& items, const PredictionNetwork& net) {
  require_shape(users, users.rows(), net.dim(), "prediction users");
  require_shape(items, users.rows(), net.dim(), "prediction items");
}

void check_context(const ConfounderContext& ctx, std::size_t d) {
  if (ctx.centroids.rows() == 0) {
    throw std::invalid_argument("backdoor adjustment needs at least one confounder centroid");
  }
  require_shape(ctx.centroids, ctx.centroids.rows(), d, "confounder centroids");
}

struct Selection {
  Mat user_sel, item_sel, centroid_user, centroid_item, soft_user, soft_item, phi;
};

Selection select(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net) {
  check_pairs(users, items, net);
  check_context(ctx, net.dim());
  Selection s;
  s.user_sel = matmul(users, net.w_u);
  s.item_sel = matmul(items, net.w_v);
  s.centroid_user = matmul(ctx.centroids, net.w_uc);
  s.centroid_item = matmul(ctx.centroids, net.w_vc);
  s.soft_user = matmul_nt(s.user_sel, s.centroid_user);
  s.soft_item = matmul_nt(s.item_sel, s.centroid_item);
  softmax_rows(s.soft_user);
  softmax_rows(s.soft_item);
  s.phi = (s.soft_user + s.soft_item) * 0.5;
  return s;
}

}  // namespace

ParamList PredictionNetwork::params() {
  ParamList out{{"pred.w_u", &w_u}, {"pred.w_uc", &w_uc}, {"pred.w_v", &w_v}, {"pred.w_vc", &w_vc},
                {"pred.w_fc", &w_fc}};
  append(out, mlp.params("pred.mlp"));
  return out;
}

PredictionNetwork init_prediction_network(std::size_t dim, const PredictionInit& init, std::uint64_t seed) {
  if (dim == 0 || init.fusion_dim < 1 || init.final_hidden < 1) {
    throw std::invalid_argument("prediction network: dimensions must be positive");
  }
  Rng rng(seed);
  const std::size_t sel = init.selection_dim > 0 ? static_cast<std::size_t>(init.selection_dim) : dim;
  PredictionNetwork net;
  net.w_u = gaussian_mat(dim, sel, init.stddev, rng);
  net.w_uc = gaussian_mat(dim, sel, init.stddev, rng);
  net.w_v = gaussian_mat(dim, sel, init.stddev, rng);
  net.w_vc = gaussian_mat(dim, sel, init.stddev, rng);
  const auto e = static_cast<std::size_t>(init.fusion_dim);
  net.w_fc = gaussian_mat(3 * dim, e, 1.0 / std::sqrt(static_cast<double>(3 * dim)), rng);
  std::vector<std::size_t> dims{e};
  std::vector<Activation> acts;
  for (int h : init.hidden) {
    if (h < 1) throw std::invalid_argument("prediction network: hidden widths must be positive");
    dims.push_back(static_cast<std::size_t>(h));
    acts.push_back(Activation::kRelu);
  }
  dims.push_back(static_cast<std::size_t>(init.final_hidden));
  acts.push_back(Activation::kRelu);
  dims.push_back(1);
  acts.push_back(Activation::kIdentity);
  // He-style scale per layer keeps ReLU activations from shrinking through the stack.
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double sd = std::sqrt(2.0 / static_cast<double>(dims[l]));
    net.mlp.layers.push_back({gaussian_mat(dims[l], dims[l + 1], sd, rng), Mat(1, dims[l + 1]), acts[l]});
  }
  return net;
}

std::string_view to_string(MixtureNormalization n) {
  return n == MixtureNormalization::kLiteral ? "literal" : "renormalized";
}

MixtureNormalization mixture_normalization_from_string(std::string_view s) {
  if (s == "literal") return MixtureNormalization::kLiteral;
  if (s == "renormalized") return MixtureNormalization::kRenormalized;
  throw std::invalid_argument("unknown mixture normalization '" + std::string(s) + "' (literal|renormalized)");
}

Mat confounder_weights(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net) {
  return select(users, items, ctx, net).phi;
}

Mat backdoor_mixture(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net) {
  Mat mix = matmul(select(users, items, ctx, net).phi, ctx.centroids);
  mix *= ctx.mixture_scale();
  return mix;
}

Mat backdoor_input(const Mat& users, const Mat& items, const ConfounderContext& ctx, const PredictionNetwork& net) {
  const Mat mix = backdoor_mixture(users, items, ctx, net);
  return matmul(hstack({&users, &items, &mix}), net.w_fc);
}

Mat predict(const Mat& q_in, const PredictionNetwork& net) {
  Mat out = mlp_forward(net.mlp, q_in);
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Mat score_logits(const Mat& users, const Mat& items, const ScoringContext& ctx, const PredictionNetwork& net,
                 ScoreCache* cache) {
  check_pairs(users, items, net);
  Mat mix;
  if (ctx.mode == ScoringMode::kBackdoor) {
    auto s = select(users, items, ctx.backdoor, net);
    mix = matmul(s.phi, ctx.backdoor.centroids);
    mix *= ctx.backdoor.mixture_scale();
    if (cache) {
      cache->user_sel = std::move(s.user_sel);
      cache->item_sel = std::move(s.item_sel);
      cache->centroid_user = std::move(s.centroid_user);
      cache->centroid_item = std::move(s.centroid_item);
      cache->soft_user = std::move(s.soft_user);
      cache->soft_item = std::move(s.soft_item);
    }
  } else {
    require_shape(ctx.coarse, 1, net.dim(), "coarse confounder vector");
    mix = Mat(users.rows(), net.dim());
    add_row_broadcast(mix, ctx.coarse);
  }
  Mat input = hstack({&users, &items, &mix});
  Mat q = matmul(input, net.w_fc);
  Mat logits = mlp_forward(net.mlp, q, cache ? &cache->mlp : nullptr);
  if (cache) {
    cache->users = users;
    cache->items = items;
    cache->input = std::move(input);
    cache->q_in = std::move(q);
  }
  return logits;
}

ScoreGrads score_backward(const ScoringContext& ctx, const PredictionNetwork& net, const ScoreCache& cache,
                          const Mat& d_logits) {
  const std::size_t d = net.dim();
  ScoreGrads g;
  auto mg = mlp_backward(net.mlp, cache.mlp, d_logits);
  const Mat d_fc = matmul_tn(cache.input, mg.input);
  const Mat d_input = matmul_nt(mg.input, net.w_fc);
  g.users = slice_cols(d_input, 0, d);
  g.items = slice_cols(d_input, d, 2 * d);
  Mat d_wu(net.w_u.rows(), net.w_u.cols()), d_wuc(net.w_uc.rows(), net.w_uc.cols());
  Mat d_wv(net.w_v.rows(), net.w_v.cols()), d_wvc(net.w_vc.rows(), net.w_vc.cols());
  if (ctx.mode == ScoringMode::kBackdoor) {
    const Mat& c = ctx.backdoor.centroids;
    Mat d_phi = matmul_nt(slice_cols(d_input, 2 * d, 3 * d), c);
    d_phi *= 0.5 * ctx.backdoor.mixture_scale();
    // User side.
    const Mat dl_u = softmax_rows_backward(cache.soft_user, d_phi);
    const Mat d_usel = matmul(dl_u, cache.centroid_user);
    const Mat d_cu = matmul_tn(dl_u, cache.user_sel);
    matmul_tn_acc(cache.users, d_usel, d_wu);
    matmul_tn_acc(c, d_cu, d_wuc);
    g.users += matmul_nt(d_usel, net.w_u);
    // Item side.
    const Mat dl_v = softmax_rows_backward(cache.soft_item, d_phi);
    const Mat d_vsel = matmul(dl_v, cache.centroid_item);
    const Mat d_cv = matmul_tn(dl_v, cache.item_sel);
    matmul_tn_acc(cache.items, d_vsel, d_wv);
    matmul_tn_acc(c, d_cv, d_wvc);
    g.items += matmul_nt(d_vsel, net.w_v);
  }
  g.net.push_back(std::move(d_wu));
  g.net.push_back(std::move(d_wuc));
  g.net.push_back(std::move(d_wv));
  g.net.push_back(std::move(d_wvc));
  g.net.push_back(d_fc);
  append_grads(g.net, std::move(mg));
  return g;
}

double bce_with_logits(const Mat& logits, std::span<const double> labels, Mat* d_logits) {
  if (logits.size() != labels.size()) throw ShapeError("bce_with_logits: label count mismatch");
  if (labels.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(labels.size());
  if (d_logits) *d_logits = Mat(logits.rows(), logits.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    loss += softplus(logits[i]) - labels[i] * logits[i];
    if (d_logits) (*d_logits)[i] = (sigmoid(logits[i]) - labels[i]) * inv;
  }
  return loss * inv;
}

std::array<ScoringContext, 2> make_contexts(const ConfounderSubspace& s, Variant v, MixtureNormalization n) {
  std::array<ScoringContext, 2> out;
  for (Domain d : kDomains) {
    auto& c = out[static_cast<int>(d)];
    c.mode = v == Variant::kCoarse ? ScoringMode::kCoarse : ScoringMode::kBackdoor;
    c.backdoor.centroids = s.centroids(d);
    c.backdoor.normalization = n;
    c.coarse = s.coarse(d);
  }
  return out;
}

ParamList finetune_params(DeconfoundedModel& model) {
  ParamList out = model.backbone.params();
  out.resize(out.size() - 2 * model.backbone.classifier.layers.size());
  append(out, model.net.params());
  return out;
}

namespace {

struct PairBatch {
  std::vector<int> users, items;
  std::vector<double> labels;
};

PairBatch gather(const TrainingSamples& s, std::span<const std::size_t> groups) {
  PairBatch b;
  const std::size_t per = s.k + 1;
  for (std::size_t g : groups) {
    for (std::size_t j = 0; j < per; ++j) {
      b.users.push_back(s.users[g * per + j]);
      b.items.push_back(s.items[g * per + j]);
      b.labels.push_back(s.labels[g * per + j]);
    }
  }
  return b;
}

}  // namespace

double finetune_loss(DeconfoundedModel& model, const DomainGraphs& graphs, const std::array<TrainingSamples, 2>& samples,
                     std::span<const std::size_t> groups_a, std::span<const std::size_t> groups_b, Grads* grads) {
  const auto fwd = backbone_forward(model.backbone, graphs);
  const std::array<std::span<const std::size_t>, 2> groups{groups_a, groups_b};
  BundleGrads up;
  Grads net_grads;
  double loss = 0.0;
  for (Domain dom : kDomains) {
    const int x = static_cast<int>(dom);
    const auto batch = gather(samples[x], groups[x]);
    if (batch.users.empty()) continue;
    const Mat eu = gather_rows(fwd.bundle.user_pref[x], batch.users);
    const Mat ev = gather_rows(fwd.bundle.item_emb[x], batch.items);
    ScoreCache cache;
    const Mat logits = score_logits(eu, ev, model.contexts[x], model.net, grads ? &cache : nullptr);
    Mat d_logits;
    loss += bce_with_logits(logits, batch.labels, grads ? &d_logits : nullptr);
    if (!grads) continue;
    auto sg = score_backward(model.contexts[x], model.net, cache, d_logits);
    if (net_grads.empty()) {
      net_grads = std::move(sg.net);
    } else {
      for (std::size_t i = 0; i < net_grads.size(); ++i) net_grads[i] += sg.net[i];
    }
    up.user_pref[x] = Mat(fwd.bundle.user_pref[x].rows(), model.net.dim());
    up.item_emb[x] = Mat(fwd.bundle.item_emb[x].rows(), model.net.dim());
    scatter_add_rows(sg.users, batch.users, up.user_pref[x]);
    scatter_add_rows(sg.items, batch.items, up.item_emb[x]);
  }
  if (grads) {
    if (net_grads.empty()) net_grads = zeros_like(model.net.params());
    *grads = backbone_backward(model.backbone, graphs, fwd, up);
    grads->resize(grads->size() - 2 * model.backbone.classifier.layers.size());
    for (auto& g : net_grads) grads->push_back(std::move(g));
  }
  return loss;
}

FinetuneResult finetune(DeconfoundedModel& model, const LeaveOneOutSplit& split, const FinetuneConfig& cfg,
                        std::uint64_t seed) {
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("finetune: bad schedule");
  const auto graphs = build_graphs(split);
  auto params = finetune_params(model);
  AdamState adam;
  Rng order_rng(derive_seed(seed, "finetune.order"));
  FinetuneResult res;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::array<TrainingSamples, 2> samples;
    std::array<std::vector<std::size_t>, 2> order;
    for (Domain dom : kDomains) {
      const int x = static_cast<int>(dom);
      const auto tag = derive_seed(seed, "finetune.neg." + std::string(domain_name(dom)));
      samples[x] = sample_train_negatives(split.domain(dom), cfg.train_negatives,
                                          derive_seed(tag, static_cast<std::uint64_t>(epoch)));
      order[x].resize(samples[x].positives);
      std::iota(order[x].begin(), order[x].end(), std::size_t{0});
      std::shuffle(order[x].begin(), order[x].end(), order_rng);
    }
    const std::size_t most = std::max(order[0].size(), order[1].size());
    const std::size_t steps = std::max<std::size_t>(1, (most + cfg.batch_size - 1) / cfg.batch_size);
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::array<std::span<const std::size_t>, 2> groups;
      for (int x : {0, 1}) {
        const std::size_t n = order[x].size();
        groups[x] = std::span<const std::size_t>(order[x].data() + n * step / steps,
                                                 n * (step + 1) / steps - n * step / steps);
      }
      Grads grads;
      const double loss = finetune_loss(model, graphs, samples, groups[0], groups[1], &grads);
      if (!std::isfinite(loss)) {
        throw NonFiniteError("finetune: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(step) + "; parameter norms: " + norms_summary(params));
      }
      adam_step(params, grads, adam, cfg.lr);
      epoch_loss += loss / static_cast<double>(steps);
    }
    spdlog::debug("finetune epoch {}: loss {:.5f}", epoch, epoch_loss);
    res.loss_history.push_back(epoch_loss);
  }
  quantize_to_f32(params);
  return res;
}

void score_candidates(const DeconfoundedModel& model, const PreferenceBundle& bundle, Domain d, int user,
                      std::span<const int> items, std::span<double> out) {
  if (items.size() != out.size()) throw ShapeError("score_candidates: output length");
  const int x = static_cast<int>(d);
  const std::vector<int> users(items.size(), user);
  const Mat eu = gather_rows(bundle.user_pref[x], users);
  const Mat ev = gather_rows(bundle.item_emb[x], items);
  const Mat logits = score_logits(eu, ev, model.contexts[x], model.net);
  std::copy(logits.values().begin(), logits.values().end(), out.begin());
}

}  // namespace cd2cdr
