#include "cd2cdr/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cd2cdr/adam.hpp"
#include "cd2cdr/errors.hpp"

namespace cd2cdr {

namespace {

constexpr int kA = 0;
constexpr int kB = 1;

int idx(Domain d) { return static_cast<int>(d); }

void add_into(Mat& dst, const Mat& src) {
  if (src.empty()) return;
  if (dst.empty()) {
    dst = src;
  } else {
    dst += src;
  }
}

Mat or_zeros(const Mat& m, std::size_t rows, std::size_t cols) { return m.empty() ? Mat(rows, cols) : m; }

EmbeddingBlock make_block(std::size_t rows, const std::optional<Mat>& features, std::size_t d,
                          double stddev, Rng& rng) {
  EmbeddingBlock b;
  if (features) {
    require_shape(*features, rows, features->cols(), "feature rows");
    b.source = EmbeddingSource::kFromFeatures;
    b.features = *features;
    // Scaled so unit-variance features land at the ID-table scale.
    b.map = gaussian_mat(features->cols(), d, stddev / std::sqrt(static_cast<double>(features->cols())), rng);
  } else {
    b.source = EmbeddingSource::kLearnableId;
    b.table = gaussian_mat(rows, d, stddev, rng);
  }
  return b;
}

void add_block_params(ParamList& out, EmbeddingBlock& b, const std::string& name) {
  if (b.source == EmbeddingSource::kLearnableId) {
    out.push_back({name + ".table", &b.table});
  } else {
    out.push_back({name + ".map", &b.map});
  }
}

Mat block_grad(const EmbeddingBlock& b, const Mat& d_embed) {
  if (b.source == EmbeddingSource::kLearnableId) return d_embed;
  return matmul_tn(*b.features, d_embed);
}

double train_density(const DomainSplit& s) {
  if (s.num_users() == 0 || s.num_items == 0) return 0.0;
  return static_cast<double>(s.num_train_interactions()) /
         (static_cast<double>(s.num_users()) * static_cast<double>(s.num_items));
}

}  // namespace

std::size_t EmbeddingBlock::rows() const {
  return source == EmbeddingSource::kLearnableId ? table.rows() : features->rows();
}

Mat EmbeddingBlock::embed() const {
  if (source == EmbeddingSource::kLearnableId) return table;
  return encode_items(*features, map);
}

Mat encode_items(const Mat& raw, const Mat& w_rd) {
  if (raw.cols() != w_rd.rows()) {
    throw ShapeError("encode_items: features " + raw.shape_str() + " vs map " + w_rd.shape_str());
  }
  return matmul(raw, w_rd);
}

Mat augment_interpolate(const Mat& a, const Mat& b, double eta) {
  require_same_shape(a, b, "augment_interpolate");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("augment_interpolate: eta must be in [0, 1]");
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = eta * a[i] + (1.0 - eta) * b[i];
  return out;
}

ParamList BackboneParams::params() {
  ParamList out;
  add_block_params(out, users[kA], "user.A");
  add_block_params(out, users[kB], "user.B");
  add_block_params(out, items[kA], "item.A");
  add_block_params(out, items[kB], "item.B");
  out.push_back({"head.shared", &head_shared});
  out.push_back({"head.specific", &head_specific});
  out.push_back({"head.independent", &head_independent});
  out.push_back({"attn.query", &attn_query});
  out.push_back({"attn.bias", &attn_bias});
  append(out, classifier.params("classifier"));
  return out;
}

DomainGraphs build_graphs(const LeaveOneOutSplit& split) {
  DomainGraphs g;
  g.a = InteractionGraph::from_user_items(split.a.train_items, split.a.num_items);
  g.b = InteractionGraph::from_user_items(split.b.train_items, split.b.num_items);
  g.sparser = train_density(split.a) < train_density(split.b) ? Domain::kA : Domain::kB;
  return g;
}

BackboneParams init_backbone(const DualDomainDataset& ds, const DomainGraphs& graphs, const BackboneInit& init,
                             std::uint64_t seed) {
  if (init.dim < 1) throw std::invalid_argument("backbone: dim must be >= 1");
  if (init.depth < 0) throw std::invalid_argument("backbone: depth must be >= 0");
  if (!(init.eta >= 0.0 && init.eta <= 1.0)) throw std::invalid_argument("backbone: eta must be in [0, 1]");
  const auto d = static_cast<std::size_t>(init.dim);
  Rng rng(seed);
  BackboneParams p;
  for (Domain dom : kDomains) {
    const auto& dd = ds.domain(dom);
    if (graphs.domain(dom).num_users() != ds.num_users() || graphs.domain(dom).num_items() != dd.num_items()) {
      throw ShapeError("backbone: graph and dataset sizes differ");
    }
    p.users[idx(dom)] = make_block(ds.num_users(), dd.user_features, d, init.embed_stddev, rng);
    p.items[idx(dom)] = make_block(dd.num_items(), dd.item_features, d, init.embed_stddev, rng);
  }
  auto head = [&] {
    Mat h = Mat::identity(d);
    if (init.head_noise > 0.0) h += gaussian_mat(d, d, init.head_noise, rng);
    return h;
  };
  p.head_shared = head();
  p.head_specific = head();
  p.head_independent = head();
  p.classifier = make_mlp({d, d, 1}, {Activation::kTanh, Activation::kIdentity}, init.classifier_stddev, rng);
  p.attn_query = gaussian_mat(1, d, init.embed_stddev, rng);
  p.attn_bias = Mat(1, 3);
  p.depth = init.depth;
  p.eta = init.eta;
  p.sparser = graphs.sparser;
  return p;
}

Components disentangle(const std::array<Mat, 2>& inputs, const BackboneParams& p) {
  Components c;
  for (int x : {kA, kB}) {
    c.shared[x] = matmul(inputs[x], p.head_shared);
    c.specific[x] = matmul(inputs[x], p.head_specific);
    c.independent[x] = matmul(inputs[x], p.head_independent);
  }
  c.z_shared = (c.shared[kA] + c.shared[kB]) * 0.5;
  return c;
}

Fused fuse(const Mat& shared, const Mat& specific, const Mat& independent, const Mat& query, const Mat& bias) {
  require_same_shape(shared, specific, "fuse");
  require_same_shape(shared, independent, "fuse");
  require_shape(query, 1, shared.cols(), "fuse query");
  require_shape(bias, 1, 3, "fuse bias");
  const std::array<const Mat*, 3> comps{&shared, &specific, &independent};
  Fused f{Mat(shared.rows(), shared.cols()), Mat(shared.rows(), 3)};
  for (std::size_t u = 0; u < shared.rows(); ++u) {
    std::array<double, 3> logit{};
    for (int k = 0; k < 3; ++k) logit[k] = dot(comps[k]->row(u), query.row(0)) + bias[k];
    const double mx = *std::max_element(logit.begin(), logit.end());
    double z = 0.0;
    for (double& l : logit) z += (l = std::exp(l - mx));
    auto out = f.pref.row(u);
    for (int k = 0; k < 3; ++k) {
      const double w = logit[k] / z;
      f.weights(u, k) = w;
      auto src = comps[k]->row(u);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * src[j];
    }
  }
  return f;
}

BackboneForward backbone_forward(const BackboneParams& p, const DomainGraphs& graphs) {
  BackboneForward f;
  for (Domain dom : kDomains) {
    const int x = idx(dom);
    auto prop = propagate_graph(graphs.domain(dom), p.users[x].embed(), p.items[x].embed(), p.depth);
    f.coarse_users[x] = std::move(prop.users);
    f.bundle.item_emb[x] = std::move(prop.items);
  }
  const int s = idx(p.sparser);
  const int dense = 1 - s;
  f.inputs[dense] = f.coarse_users[dense];
  f.inputs[s] = (f.coarse_users[s] + augment_interpolate(f.coarse_users[kA], f.coarse_users[kB], p.eta)) * 0.5;
  f.comps = disentangle(f.inputs, p);
  f.bundle.z_shared = f.comps.z_shared;
  for (int x : {kA, kB}) {
    f.bundle.z_specific[x] = f.comps.specific[x];
    f.bundle.z_independent[x] = f.comps.independent[x];
    auto fused = fuse(f.comps.z_shared, f.comps.specific[x], f.comps.independent[x], p.attn_query, p.attn_bias);
    f.bundle.user_pref[x] = std::move(fused.pref);
    f.bundle.attention[x] = std::move(fused.weights);
  }
  return f;
}

Grads backbone_backward(const BackboneParams& p, const DomainGraphs& graphs, const BackboneForward& fwd,
                        const BundleGrads& up) {
  const std::size_t m = fwd.comps.z_shared.rows();
  const std::size_t d = fwd.comps.z_shared.cols();
  Mat d_query(1, d), d_bias(1, 3), d_zsha(m, d);
  std::array<Mat, 2> d_shared, d_spec, d_ind;
  for (int x : {kA, kB}) {
    d_shared[x] = or_zeros(up.shared_per_domain[x], m, d);
    d_spec[x] = or_zeros(up.specific[x], m, d);
    d_ind[x] = Mat(m, d);
  }

  // Attention fusion.
  for (int x : {kA, kB}) {
    if (up.user_pref[x].empty()) continue;
    const Mat& g = up.user_pref[x];
    const Mat& w = fwd.bundle.attention[x];
    const std::array<const Mat*, 3> comps{&fwd.comps.z_shared, &fwd.comps.specific[x], &fwd.comps.independent[x]};
    std::array<Mat*, 3> dcomps{&d_zsha, &d_spec[x], &d_ind[x]};
    for (std::size_t u = 0; u < m; ++u) {
      auto gu = g.row(u);
      std::array<double, 3> dw{};
      double s = 0.0;
      for (int k = 0; k < 3; ++k) {
        dw[k] = dot(gu, comps[k]->row(u));
        s += w(u, k) * dw[k];
      }
      for (int k = 0; k < 3; ++k) {
        const double dl = w(u, k) * (dw[k] - s);
        auto zk = comps[k]->row(u);
        auto dz = dcomps[k]->row(u);
        for (std::size_t j = 0; j < d; ++j) {
          dz[j] += w(u, k) * gu[j] + dl * p.attn_query[j];
          d_query[j] += dl * zk[j];
        }
        d_bias[k] += dl;
      }
    }
  }
  for (int x : {kA, kB}) d_shared[x] += d_zsha * 0.5;

  // Heads.
  Mat d_hsha(d, d), d_hspe(d, d), d_hind(d, d);
  std::array<Mat, 2> d_input;
  for (int x : {kA, kB}) {
    matmul_tn_acc(fwd.inputs[x], d_shared[x], d_hsha);
    matmul_tn_acc(fwd.inputs[x], d_spec[x], d_hspe);
    matmul_tn_acc(fwd.inputs[x], d_ind[x], d_hind);
    d_input[x] = matmul_nt(d_shared[x], p.head_shared);
    d_input[x] += matmul_nt(d_spec[x], p.head_specific);
    d_input[x] += matmul_nt(d_ind[x], p.head_independent);
  }

  // Augmentation of the sparser domain.
  const int s = idx(p.sparser);
  const int dense = 1 - s;
  std::array<Mat, 2> d_coarse;
  d_coarse[dense] = d_input[dense];
  d_coarse[s] = d_input[s] * 0.5;
  d_coarse[kA] += d_input[s] * (0.5 * p.eta);
  d_coarse[kB] += d_input[s] * (0.5 * (1.0 - p.eta));

  // Propagation is symmetric: push gradients through the same operator.
  std::array<Mat, 2> d_users, d_items;
  for (Domain dom : kDomains) {
    const int x = idx(dom);
    const Mat d_item_up = or_zeros(up.item_emb[x], fwd.bundle.item_emb[x].rows(), d);
    auto back = propagate_graph(graphs.domain(dom), d_coarse[x], d_item_up, p.depth);
    d_users[x] = block_grad(p.users[x], back.users);
    d_items[x] = block_grad(p.items[x], back.items);
  }

  Grads g;
  g.push_back(std::move(d_users[kA]));
  g.push_back(std::move(d_users[kB]));
  g.push_back(std::move(d_items[kA]));
  g.push_back(std::move(d_items[kB]));
  g.push_back(std::move(d_hsha));
  g.push_back(std::move(d_hspe));
  g.push_back(std::move(d_hind));
  g.push_back(std::move(d_query));
  g.push_back(std::move(d_bias));
  for (const auto& layer : p.classifier.layers) {
    g.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.emplace_back(layer.bias.rows(), layer.bias.cols());
  }
  return g;
}

DisentangleLoss disentangle_loss(const BackboneParams& p, const Components& c, const DisentangleWeights& w,
                                 BundleGrads* up, Grads* classifier_grads) {
  const std::size_t m = c.z_shared.rows();
  const std::size_t d = c.z_shared.cols();
  const double rows = 2.0 * static_cast<double>(m);
  DisentangleLoss out;
  const bool want = up != nullptr && classifier_grads != nullptr;
  if (want) {
    *classifier_grads = Grads{};
    for (const auto& layer : p.classifier.layers) {
      classifier_grads->emplace_back(layer.weight.rows(), layer.weight.cols());
      classifier_grads->emplace_back(layer.bias.rows(), layer.bias.cols());
    }
  }

  // Domain classification of specific rows: A -> 0, B -> 1.
  {
    const Mat x = vstack({&c.specific[kA], &c.specific[kB]});
    MlpCache cache;
    const Mat logit = mlp_forward(p.classifier, x, want ? &cache : nullptr);
    Mat dl(logit.rows(), 1);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logit.rows(); ++r) {
      const double y = r < m ? 0.0 : 1.0;
      const double l = logit[r];
      out.classify += softplus(l) - y * l;
      dl[r] = w.classify * (sigmoid(l) - y) / rows;
      if ((l > 0.0) == (y > 0.5)) ++correct;
    }
    out.classify /= rows;
    out.accuracy = static_cast<double>(correct) / rows;
    if (want) {
      auto g = mlp_backward(p.classifier, cache, dl);
      accumulate_grads(*classifier_grads, 0, g);
      for (int x2 : {kA, kB}) {
        Mat part(m, d);
        std::copy_n(g.input.data() + static_cast<std::size_t>(x2) * m * d, m * d, part.data());
        add_into(up->specific[x2], part);
      }
    }
  }

  // Confusion on shared rows: cross-entropy against the uniform target (1/2, 1/2).
  {
    const Mat x = vstack({&c.shared[kA], &c.shared[kB]});
    MlpCache cache;
    const Mat logit = mlp_forward(p.classifier, x, want ? &cache : nullptr);
    Mat dl(logit.rows(), 1);
    for (std::size_t r = 0; r < logit.rows(); ++r) {
      const double l = logit[r];
      out.confuse += softplus(l) - 0.5 * l;
      dl[r] = w.confuse * (sigmoid(l) - 0.5) / rows;
    }
    out.confuse /= rows;
    if (want) {
      auto g = mlp_backward(p.classifier, cache, dl);
      accumulate_grads(*classifier_grads, 0, g);
      for (int x2 : {kA, kB}) {
        Mat part(m, d);
        std::copy_n(g.input.data() + static_cast<std::size_t>(x2) * m * d, m * d, part.data());
        add_into(up->shared_per_domain[x2], part);
      }
    }
  }

  // Orthogonality between specific and shared: sum_X ||Z_spe^X^T Z_sha||_F^2 / m^2, the
  // squared cross-covariance. Dividing by m alone grows the term with the user count.
  {
    const double inv_m = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    Mat d_zsha(m, d);
    for (int x : {kA, kB}) {
      const Mat gram = matmul_tn(c.specific[x], c.z_shared);
      const double f = frobenius_norm(gram);
      out.orthogonal += f * f * inv_m;
      if (want) {
        add_into(up->specific[x], matmul_nt(c.z_shared, gram) * (2.0 * w.orthogonal * inv_m));
        d_zsha += matmul(c.specific[x], gram) * (2.0 * w.orthogonal * inv_m);
      }
    }
    if (want) {
      for (int x : {kA, kB}) add_into(up->shared_per_domain[x], d_zsha * 0.5);
    }
  }
  return out;
}

double dot_bce_loss(const PreferenceBundle& b, Domain d, std::span<const int> users, std::span<const int> items,
                    std::span<const double> labels, BundleGrads* up) {
  if (users.size() != items.size() || users.size() != labels.size()) throw ShapeError("dot_bce_loss: lengths");
  if (users.empty()) return 0.0;
  const int x = idx(d);
  const Mat& eu = b.user_pref[x];
  const Mat& ev = b.item_emb[x];
  const double inv_n = 1.0 / static_cast<double>(users.size());
  Mat* gu = nullptr;
  Mat* gv = nullptr;
  if (up) {
    if (up->user_pref[x].empty()) up->user_pref[x] = Mat(eu.rows(), eu.cols());
    if (up->item_emb[x].empty()) up->item_emb[x] = Mat(ev.rows(), ev.cols());
    gu = &up->user_pref[x];
    gv = &up->item_emb[x];
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < users.size(); ++r) {
    const auto u = static_cast<std::size_t>(users[r]);
    const auto i = static_cast<std::size_t>(items[r]);
    const double s = dot(eu.row(u), ev.row(i));
    loss += softplus(s) - labels[r] * s;
    if (up) {
      const double ds = (sigmoid(s) - labels[r]) * inv_n;
      auto ru = gu->row(u);
      auto ri = gv->row(i);
      auto eur = eu.row(u);
      auto evr = ev.row(i);
      for (std::size_t j = 0; j < ru.size(); ++j) {
        ru[j] += ds * evr[j];
        ri[j] += ds * eur[j];
      }
    }
  }
  return loss * inv_n;
}

namespace {

struct Batch {
  std::vector<int> users, items;
  std::vector<double> labels;
};

Batch gather_groups(const TrainingSamples& s, std::span<const std::size_t> groups) {
  Batch b;
  const std::size_t per = s.k + 1;
  for (std::size_t g : groups) {
    for (std::size_t j = 0; j < per; ++j) {
      const std::size_t r = g * per + j;
      b.users.push_back(s.users[r]);
      b.items.push_back(s.items[r]);
      b.labels.push_back(s.labels[r]);
    }
  }
  return b;
}

}  // namespace

double pretrain_loss(const BackboneParams& p, const DomainGraphs& graphs, const std::array<TrainingSamples, 2>& samples,
                     std::span<const std::size_t> groups_a, std::span<const std::size_t> groups_b,
                     const DisentangleWeights& w, Grads* grads) {
  const auto fwd = backbone_forward(p, graphs);
  BundleGrads up;
  BundleGrads* upp = grads ? &up : nullptr;
  double loss = 0.0;
  const std::array<std::span<const std::size_t>, 2> groups{groups_a, groups_b};
  for (Domain dom : kDomains) {
    const auto batch = gather_groups(samples[idx(dom)], groups[idx(dom)]);
    loss += dot_bce_loss(fwd.bundle, dom, batch.users, batch.items, batch.labels, upp);
  }
  Grads cls;
  const auto dl = disentangle_loss(p, fwd.comps, w, upp, grads ? &cls : nullptr);
  loss += dl.total(w);
  if (grads) {
    *grads = backbone_backward(p, graphs, fwd, up);
    const std::size_t offset = grads->size() - cls.size();
    for (std::size_t i = 0; i < cls.size(); ++i) (*grads)[offset + i] += cls[i];
  }
  return loss;
}

double classifier_accuracy(const MlpParams& classifier, const Mat& spec_a, const Mat& spec_b) {
  const Mat la = mlp_forward(classifier, spec_a);
  const Mat lb = mlp_forward(classifier, spec_b);
  std::size_t correct = 0;
  for (double l : la.values()) correct += l <= 0.0;
  for (double l : lb.values()) correct += l > 0.0;
  return static_cast<double>(correct) / static_cast<double>(la.size() + lb.size());
}

PretrainResult pretrain(const DualDomainDataset& ds, const LeaveOneOutSplit& split, const BackboneInit& init,
                        const PretrainConfig& cfg, std::uint64_t seed) {
  if (cfg.epochs < 0) throw std::invalid_argument("pretrain: epochs must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("pretrain: batch size must be >= 1");
  const auto graphs = build_graphs(split);
  PretrainResult res;
  res.params = init_backbone(ds, graphs, init, derive_seed(seed, "pretrain.init"));
  auto params = res.params.params();
  AdamState adam;
  Rng order_rng(derive_seed(seed, "pretrain.order"));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::array<TrainingSamples, 2> samples;
    std::array<std::vector<std::size_t>, 2> order;
    for (Domain dom : kDomains) {
      const auto tag = derive_seed(seed, "pretrain.neg." + std::string(domain_name(dom)));
      samples[idx(dom)] =
          sample_train_negatives(split.domain(dom), cfg.train_negatives, derive_seed(tag, static_cast<std::uint64_t>(epoch)));
      order[idx(dom)].resize(samples[idx(dom)].positives);
      std::iota(order[idx(dom)].begin(), order[idx(dom)].end(), std::size_t{0});
      std::shuffle(order[idx(dom)].begin(), order[idx(dom)].end(), order_rng);
    }
    // Both domains advance together; each contributes an equal share of its positives per step.
    const std::size_t most = std::max(order[kA].size(), order[kB].size());
    const std::size_t steps = std::max<std::size_t>(1, (most + cfg.batch_size - 1) / cfg.batch_size);
    EpochLog log{epoch, 0.0, 0.0, 0.0};
    for (std::size_t step = 0; step < steps; ++step) {
      std::array<std::span<const std::size_t>, 2> groups;
      for (int x : {kA, kB}) {
        const std::size_t n = order[x].size();
        const std::size_t lo = n * step / steps;
        const std::size_t hi = n * (step + 1) / steps;
        groups[x] = std::span<const std::size_t>(order[x].data() + lo, hi - lo);
      }
      const auto fwd = backbone_forward(res.params, graphs);
      BundleGrads up;
      double rec = 0.0;
      for (Domain dom : kDomains) {
        const auto batch = gather_groups(samples[idx(dom)], groups[idx(dom)]);
        rec += dot_bce_loss(fwd.bundle, dom, batch.users, batch.items, batch.labels, &up);
      }
      Grads cls;
      const auto dl = disentangle_loss(res.params, fwd.comps, cfg.weights, &up, &cls);
      const double total = rec + dl.total(cfg.weights);
      if (!std::isfinite(total)) {
        throw NonFiniteError("pretrain: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(step) + "; parameter norms: " + norms_summary(params));
      }
      auto grads = backbone_backward(res.params, graphs, fwd, up);
      const std::size_t offset = grads.size() - cls.size();
      for (std::size_t i = 0; i < cls.size(); ++i) grads[offset + i] += cls[i];
      adam_step(params, grads, adam, cfg.lr);
      log.rec_loss += rec / static_cast<double>(steps);
      log.disentangle_loss += dl.total(cfg.weights) / static_cast<double>(steps);
      log.classifier_accuracy += dl.accuracy / static_cast<double>(steps);
    }
    spdlog::debug("pretrain epoch {}: rec {:.5f} disentangle {:.5f} cls-acc {:.3f}", epoch, log.rec_loss,
                  log.disentangle_loss, log.classifier_accuracy);
    res.history.push_back(log);
  }
  quantize_to_f32(params);
  res.bundle = backbone_forward(res.params, graphs).bundle;
  return res;
}

}  // namespace cd2cdr
