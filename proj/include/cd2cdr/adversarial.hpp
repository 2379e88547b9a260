#pragma once

#include <cstdint>
#include <vector>

#include "cd2cdr/mlp.hpp"

namespace cd2cdr {

// Generators S (A -> B) and T (B -> A), discriminators H^A and H^B.
struct AdversarialPair {
  MlpParams gen_s;
  MlpParams gen_t;
  MlpParams disc_a;
  MlpParams disc_b;

  ParamList generator_params();      // S then T
  ParamList discriminator_params();  // H^A then H^B
};

struct AdversarialInit {
  // Generators start at (gain / s) * tanh(s z), a scaled identity while s z stays in the
  // linear range of tanh, so training begins from a non-trivial round trip instead of an
  // exact inverse pair.
  double generator_gain = 0.5;
  double generator_input_scale = 0.25;
  double generator_noise = 0.01;
  // Wide, O(1)-scale hidden layer: tanh units then respond to spread as well as location.
  int discriminator_hidden = 32;
  double discriminator_stddev = 0.5;
};

AdversarialPair init_adversarial(std::size_t dim, const AdversarialInit& init, std::uint64_t seed);

struct LsganLosses {
  double gen_s = 0.0;   // mean (H^B(S(z_a)) - 1)^2
  double gen_t = 0.0;   // mean (H^A(T(z_b)) - 1)^2
  double disc_a = 0.0;  // mean (H^A(z_a) - 1)^2 + mean H^A(T(z_b))^2
  double disc_b = 0.0;  // mean (H^B(z_b) - 1)^2 + mean H^B(S(z_a))^2

  double generator() const { return gen_s + gen_t; }
  double discriminator() const { return disc_a + disc_b; }
};

LsganLosses lsgan_losses(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b);

// mean_rows |T(S(z_a)) - z_a|_1 + mean_rows |S(T(z_b)) - z_b|_1
double cycle_loss(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b);

// Generator objective L_GAN(S) + L_GAN(T) + lambda L_cyc with discriminators frozen.
// Gradients align with generator_params().
double generator_objective(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b, double lambda,
                           Grads* grads);
// Discriminator objective with generators frozen; gradients align with discriminator_params().
double discriminator_objective(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b, Grads* grads);

struct AdversarialConfig {
  int epochs = 30;
  // Per-user updates: the pair has to match two finite point clouds closely enough for
  // per-user differences to vanish when nothing separates the domains.
  int batch_size = 1;
  double lr = 0.003;
  // Learning rate falls linearly from lr to lr * final_lr_fraction over the epochs.
  double final_lr_fraction = 0.02;
  double lambda = 1.0;
  AdversarialInit init;
};

struct AdversarialResult {
  AdversarialPair pair;
  double initial_cycle = 0.0;
  std::vector<double> cycle_history;  // full-data L_cyc after each epoch
  LsganLosses final_losses;

  double final_cycle() const { return cycle_history.empty() ? initial_cycle : cycle_history.back(); }
};

/// Alternates one discriminator step and one generator step per mini-batch of users.
AdversarialResult train_dual_adversarial(const Mat& z_a, const Mat& z_b, const AdversarialConfig& cfg,
                                         std::uint64_t seed);

struct SdcCandidates {
  Mat a;  // T(Z_spe^B) - Z_spe^A
  Mat b;  // S(Z_spe^A) - Z_spe^B
};

SdcCandidates sdc_candidates(const AdversarialPair& pair, const Mat& z_a, const Mat& z_b);

}  // namespace cd2cdr
