#include "cd2cdr/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cd2cdr/adam.hpp"
#include "cd2cdr/errors.hpp"

namespace cd2cdr {

namespace {

MlpParams make_generator(std::size_t d, const AdversarialInit& init, Rng& rng) {
  MlpParams g = make_mlp({d, d, d}, {Activation::kTanh, Activation::kIdentity}, init.generator_noise, rng);
  for (std::size_t i = 0; i < d; ++i) {
    g.layers[0].weight(i, i) += init.generator_input_scale;
    g.layers[1].weight(i, i) += init.generator_gain / init.generator_input_scale;
  }
  return g;
}

void zero_grads_for(Grads& g, const MlpParams& net) {
  for (const auto& layer : net.layers) {
    g.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.emplace_back(layer.bias.rows(), layer.bias.cols());
  }
}

double mean_sq(const Mat& h, double target, Mat* grad, double scale) {
  const double inv = 1.0 / static_cast<double>(h.rows());
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double e = h[i] - target;
    s += e * e;
    if (grad) (*grad)[i] = 2.0 * e * inv * scale;
  }
  return s * inv;
}

// Mean row L1 of (x - target); writes the subgradient scaled by `scale`.
double l1_rows(const Mat& x, const Mat& target, Mat* grad, double scale) {
  require_same_shape(x, target, "cycle_loss");
  const double inv = 1.0 / static_cast<double>(x.rows());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x[i] - target[i];
    s += std::abs(e);
    if (grad) (*grad)[i] = (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)) * inv * scale;
  }
  return s * inv;
}

void check_pair_inputs(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b) {
  if (z_a.rows() == 0 || z_b.rows() == 0) throw ShapeError("adversarial: empty batch");
  require_shape(z_a, z_a.rows(), pair.gen_s.in_dim(), "adversarial z_a");
  require_shape(z_b, z_b.rows(), pair.gen_t.in_dim(), "adversarial z_b");
}

}  // namespace

ParamList AdversarialPair::generator_params() {
  ParamList out = gen_s.params("gen_s");
  append(out, gen_t.params("gen_t"));
  return out;
}

ParamList AdversarialPair::discriminator_params() {
  ParamList out = disc_a.params("disc_a");
  append(out, disc_b.params("disc_b"));
  return out;
}

AdversarialPair init_adversarial(std::size_t dim, const AdversarialInit& init, std::uint64_t seed) {
  Rng rng(seed);
  AdversarialPair p;
  p.gen_s = make_generator(dim, init, rng);
  p.gen_t = make_generator(dim, init, rng);
  const std::vector<Activation> disc_acts{Activation::kTanh, Activation::kSigmoid};
  const auto hidden = static_cast<std::size_t>(init.discriminator_hidden);
  p.disc_a = make_mlp({dim, hidden, 1}, disc_acts, init.discriminator_stddev, rng);
  p.disc_b = make_mlp({dim, hidden, 1}, disc_acts, init.discriminator_stddev, rng);
  return p;
}

LsganLosses lsgan_losses(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b) {
  check_pair_inputs(pair, z_a, z_b);
  const Mat fake_b = mlp_forward(pair.gen_s, z_a);
  const Mat fake_a = mlp_forward(pair.gen_t, z_b);
  const Mat hb_fake = mlp_forward(pair.disc_b, fake_b);
  const Mat ha_fake = mlp_forward(pair.disc_a, fake_a);
  LsganLosses l;
  l.gen_s = mean_sq(hb_fake, 1.0, nullptr, 1.0);
  l.gen_t = mean_sq(ha_fake, 1.0, nullptr, 1.0);
  l.disc_b = mean_sq(mlp_forward(pair.disc_b, z_b), 1.0, nullptr, 1.0) + mean_sq(hb_fake, 0.0, nullptr, 1.0);
  l.disc_a = mean_sq(mlp_forward(pair.disc_a, z_a), 1.0, nullptr, 1.0) + mean_sq(ha_fake, 0.0, nullptr, 1.0);
  return l;
}

double cycle_loss(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b) {
  check_pair_inputs(pair, z_a, z_b);
  const Mat back_a = mlp_forward(pair.gen_t, mlp_forward(pair.gen_s, z_a));
  const Mat back_b = mlp_forward(pair.gen_s, mlp_forward(pair.gen_t, z_b));
  return l1_rows(back_a, z_a, nullptr, 1.0) + l1_rows(back_b, z_b, nullptr, 1.0);
}

double generator_objective(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b, double lambda,
                           Grads* grads) {
  check_pair_inputs(pair, z_a, z_b);
  const bool want = grads != nullptr;
  Grads gs, gt;
  if (want) {
    zero_grads_for(gs, pair.gen_s);
    zero_grads_for(gt, pair.gen_t);
  }
  double total = 0.0;

  // One direction: x -> G(x) judged by D, cycled back through F.
  auto direction = [&](const MlpParams& g, Grads& g_grads, const MlpParams& f, Grads& f_grads,
                       const MlpParams& disc, const Mat& x) {
    MlpCache g_cache, f_cache, d_cache;
    const Mat fake = mlp_forward(g, x, want ? &g_cache : nullptr);
    const Mat judged = mlp_forward(disc, fake, want ? &d_cache : nullptr);
    Mat d_judged(judged.rows(), 1);
    total += mean_sq(judged, 1.0, want ? &d_judged : nullptr, 1.0);
    const Mat back = mlp_forward(f, fake, want ? &f_cache : nullptr);
    Mat d_back(back.rows(), back.cols());
    total += lambda * l1_rows(back, x, want ? &d_back : nullptr, lambda);
    if (!want) return;
    Mat d_fake = mlp_backward(disc, d_cache, d_judged).input;
    auto fb = mlp_backward(f, f_cache, d_back);
    d_fake += fb.input;
    accumulate_grads(f_grads, 0, fb);
    accumulate_grads(g_grads, 0, mlp_backward(g, g_cache, d_fake));
  };
  direction(pair.gen_s, gs, pair.gen_t, gt, pair.disc_b, z_a);
  direction(pair.gen_t, gt, pair.gen_s, gs, pair.disc_a, z_b);
  if (want) {
    *grads = std::move(gs);
    for (auto& g : gt) grads->push_back(std::move(g));
  }
  return total;
}

double discriminator_objective(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b, Grads* grads) {
  check_pair_inputs(pair, z_a, z_b);
  const bool want = grads != nullptr;
  Grads ga, gb;
  if (want) {
    zero_grads_for(ga, pair.disc_a);
    zero_grads_for(gb, pair.disc_b);
  }
  double total = 0.0;
  auto score = [&](const MlpParams& disc, Grads& g, const Mat& x, double target) {
    MlpCache cache;
    const Mat h = mlp_forward(disc, x, want ? &cache : nullptr);
    Mat dh(h.rows(), 1);
    total += mean_sq(h, target, want ? &dh : nullptr, 1.0);
    if (want) accumulate_grads(g, 0, mlp_backward(disc, cache, dh));
  };
  const Mat fake_b = mlp_forward(pair.gen_s, z_a);
  const Mat fake_a = mlp_forward(pair.gen_t, z_b);
  score(pair.disc_a, ga, z_a, 1.0);
  score(pair.disc_a, ga, fake_a, 0.0);
  score(pair.disc_b, gb, z_b, 1.0);
  score(pair.disc_b, gb, fake_b, 0.0);
  if (want) {
    *grads = std::move(ga);
    for (auto& g : gb) grads->push_back(std::move(g));
  }
  return total;
}

AdversarialResult train_dual_adversarial(const Mat& z_a, const Mat& z_b, const AdversarialConfig& cfg,
                                         std::uint64_t seed) {
  if (z_a.rows() != z_b.rows() || z_a.cols() != z_b.cols()) {
    throw ShapeError("train_dual_adversarial: Z_spe^A " + z_a.shape_str() + " vs Z_spe^B " + z_b.shape_str());
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train_dual_adversarial: bad schedule");
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("train_dual_adversarial: lambda must be >= 0");
  AdversarialResult res;
  res.pair = init_adversarial(z_a.cols(), cfg.init, derive_seed(seed, "adversarial.init"));
  auto gen_params = res.pair.generator_params();
  auto disc_params = res.pair.discriminator_params();
  AdamState gen_adam, disc_adam;
  Rng rng(derive_seed(seed, "adversarial.order"));
  res.initial_cycle = cycle_loss(res.pair, z_a, z_b);

  const std::size_t m = z_a.rows();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double progress = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0;
    const double lr = cfg.lr * (1.0 - (1.0 - cfg.final_lr_fraction) * progress);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0, step = 0; lo < m; lo += batch, ++step) {
      const std::span<const int> rows(order.data() + lo, std::min(batch, m - lo));
      const Mat ba = gather_rows(z_a, rows);
      const Mat bb = gather_rows(z_b, rows);
      Grads g;
      const double d_loss = discriminator_objective(res.pair, ba, bb, &g);
      adam_step(disc_params, g, disc_adam, lr);
      const double g_loss = generator_objective(res.pair, ba, bb, cfg.lambda, &g);
      if (!std::isfinite(d_loss) || !std::isfinite(g_loss)) {
        throw NonFiniteError("adversarial: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(step) + "; generator norms: " + norms_summary(gen_params) +
                             "; discriminator norms: " + norms_summary(disc_params));
      }
      adam_step(gen_params, g, gen_adam, lr);
    }
    res.cycle_history.push_back(cycle_loss(res.pair, z_a, z_b));
    spdlog::debug("adversarial epoch {}: L_cyc {:.5f}", epoch, res.cycle_history.back());
  }
  quantize_to_f32(gen_params);
  quantize_to_f32(disc_params);
  if (!res.cycle_history.empty()) res.cycle_history.back() = cycle_loss(res.pair, z_a, z_b);
  res.final_losses = lsgan_losses(res.pair, z_a, z_b);
  return res;
}

SdcCandidates sdc_candidates(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b) {
  check_pair_inputs(pair, z_a, z_b);
  require_same_shape(z_a, z_b, "sdc_candidates");
  return {mlp_forward(pair.gen_t, z_b) - z_a, mlp_forward(pair.gen_s, z_a) - z_b};
}

}  // namespace cd2cdr
