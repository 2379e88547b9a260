// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers as arguments
// to run a subset; the exit status is non-zero when any selected criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "../common/oracles.hpp"
#include "cd2cdr/adversarial.hpp"
#include "cd2cdr/backbone.hpp"
#include "cd2cdr/confounders.hpp"
#include "cd2cdr/deconfounder.hpp"
#include "cd2cdr/grad_check.hpp"
#include "cd2cdr/metrics.hpp"
#include "cd2cdr/pipeline.hpp"
#include "cd2cdr/ridge.hpp"
#include "cd2cdr/synthetic.hpp"

using namespace cd2cdr;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kPhiSumTol = 1e-6;
constexpr double kRidgeRelTol = 1e-8;
constexpr double kRidgeResidualTol = 1e-10;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-6;
constexpr double kCdcCosMin = 0.8;
constexpr double kSdcCosMax = 0.3;
constexpr double kNullRatioMax = 0.10;
constexpr double kCycleShrink = 0.05;
constexpr int kSeeds = 5;
constexpr int kMajority = 4;
constexpr double kAblationConfounderWeight = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every MetricsReport produced here; criterion 8 checks NDCG <= HR on all of them.
std::vector<MetricsReport> g_reports;

Mat gaussian(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(r, c);
  for (double& v : m.values()) v = g(rng);
  return m;
}

// ---------------------------------------------------------------- 1
Outcome selection_normalization() {
  Rng rng(101);
  std::uniform_int_distribution<int> dim_pick(1, 16), j_pick(1, 40);
  std::uniform_real_distribution<double> scale_pick(0.1, 10.0);
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const auto d = static_cast<std::size_t>(dim_pick(rng));
    const auto j = static_cast<std::size_t>(j_pick(rng));
    PredictionInit pi;
    pi.fusion_dim = 4;
    pi.hidden = {4};
    pi.final_hidden = 2;
    pi.stddev = scale_pick(rng) / std::sqrt(static_cast<double>(d));
    const auto net = init_prediction_network(d, pi, static_cast<std::uint64_t>(draw));
    const double s = scale_pick(rng);
    const ConfounderContext ctx{gaussian(j, d, rng, s), MixtureNormalization::kLiteral};
    const Mat phi = confounder_weights(gaussian(1, d, rng, s), gaussian(1, d, rng, s), ctx, net);
    double total = 0.0;
    for (double v : phi.values()) total += v;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return {worst < kPhiSumTol, fmt::format("1000 draws, max |sum phi - 1| = {:.2e} (tol {:.0e})", worst, kPhiSumTol)};
}

// ---------------------------------------------------------------- 2
Outcome ridge_oracle() {
  Rng rng(202);
  std::uniform_int_distribution<int> m_pick(1, 20), d_pick(1, 8);
  std::uniform_real_distribution<double> a_pick(1e-3, 10.0);
  double worst_rel = 0.0, worst_res = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto m = static_cast<std::size_t>(m_pick(rng));
    const auto d = static_cast<std::size_t>(d_pick(rng));
    const auto dp = static_cast<std::size_t>(d_pick(rng));
    const Mat x = gaussian(m, d, rng), y = gaussian(m, dp, rng);
    const double alpha = a_pick(rng);
    const Mat w = ridge_solve(x, y, alpha);
    const Mat ref = oracle::ridge_by_elimination(x, y, alpha);
    worst_rel = std::max(worst_rel, oracle::max_abs_diff(w, ref) / std::max(oracle::max_abs_entry(ref), 1e-300));
    worst_res = std::max(worst_res, ridge_residual(x, y, alpha, w));
  }
  return {worst_rel < kRidgeRelTol && worst_res < kRidgeResidualTol,
          fmt::format("100 instances, max relative error {:.2e} (tol {:.0e}), max residual {:.2e} (tol {:.0e})",
                      worst_rel, kRidgeRelTol, worst_res, kRidgeResidualTol)};
}

// ---------------------------------------------------------------- 3
SyntheticConfig four_user_config() {
  SyntheticConfig c;
  c.users = 4;
  c.items_a = 10;
  c.items_b = 9;
  c.latent_dim = 4;
  c.sdc_a = 1;
  c.sdc_b = 1;
  c.cdc = 1;
  c.density_a = 0.5;
  c.density_b = 0.5;
  return c;
}

Outcome gradient_fidelity() {
  const auto gen = generate_synthetic(four_user_config(), 3);
  const auto split = leave_one_out_split(gen.dataset, 3, 1);
  const auto graphs = build_graphs(split);
  BackboneInit bi;
  bi.dim = 3;
  bi.embed_stddev = 0.4;
  bi.head_noise = 0.2;
  auto bb = init_backbone(gen.dataset, graphs, bi, 2);
  bb.attn_query = Mat(1, 3, {0.2, -0.3, 0.1});
  bb.attn_bias = Mat(1, 3, {0.1, -0.2, 0.05});
  const std::array<TrainingSamples, 2> samples{sample_train_negatives(split.a, 2, 8),
                                               sample_train_negatives(split.b, 2, 9)};
  std::vector<std::size_t> ga(samples[0].positives), gb(samples[1].positives);
  std::iota(ga.begin(), ga.end(), std::size_t{0});
  std::iota(gb.begin(), gb.end(), std::size_t{0});

  std::vector<std::pair<std::string, double>> errs;
  const DisentangleWeights w{1.0, 0.7, 0.3};
  errs.emplace_back("backbone", grad_check([&](Grads* g) { return pretrain_loss(bb, graphs, samples, ga, gb, w, g); },
                                           bb.params(), kGradStep).max_relative_error);

  Rng rng(4);
  auto pair = init_adversarial(3, {}, 5);
  for (auto* net : {&pair.gen_s, &pair.gen_t}) {
    for (auto& l : net->layers) l.weight += gaussian(l.weight.rows(), l.weight.cols(), rng, 0.3);
  }
  const Mat z_a = gaussian(4, 3, rng), z_b = gaussian(4, 3, rng);
  errs.emplace_back("generators", grad_check([&](Grads* g) { return generator_objective(pair, z_a, z_b, 1.0, g); },
                                             pair.generator_params(), kGradStep).max_relative_error);
  errs.emplace_back("discriminators",
                    grad_check([&](Grads* g) { return discriminator_objective(pair, z_a, z_b, g); },
                               pair.discriminator_params(), kGradStep).max_relative_error);

  DeconfoundedModel model;
  model.backbone = bb;
  model.net = init_prediction_network(3, {5, {4, 3}, 2, 2, 0.5}, 6);
  // keep every ReLU off its kink
  for (auto& l : model.net.mlp.layers)
    for (double& b : l.bias.values()) b = 0.1 + 0.05 * static_cast<double>(&b - l.bias.values().data());
  ConfounderSubspace s;
  s.sd_a = gaussian(2, 3, rng, 0.5);
  s.sd_b = gaussian(2, 3, rng, 0.5);
  s.cd = gaussian(2, 3, rng, 0.5);
  s.union_a = vstack({&s.sd_a, &s.cd});
  s.union_b = vstack({&s.sd_b, &s.cd});
  s.coarse_a = column_mean(s.union_a);
  s.coarse_b = column_mean(s.union_b);
  model.contexts = make_contexts(s, Variant::kFull, MixtureNormalization::kLiteral);
  errs.emplace_back("phase-3", grad_check([&](Grads* g) { return finetune_loss(model, graphs, samples, ga, gb, g); },
                                          finetune_params(model), kGradStep).max_relative_error);

  bool pass = true;
  std::string detail;
  for (const auto& [name, e] : errs) {
    pass = pass && e < kGradTol;
    detail += fmt::format("{}{} {:.1e}", detail.empty() ? "" : ", ", name, e);
  }
  return {pass, detail + fmt::format(" (tol {:.0e}, step {:.0e})", kGradTol, kGradStep)};
}

// ---------------------------------------------------------------- 4
Outcome cdc_recovery() {
  int ok = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SyntheticConfig c;
    c.users = 500;
    c.latent_dim = 16;
    c.cdc = 1;
    const auto g = generate_synthetic(c, static_cast<std::uint64_t>(seed));
    const Mat pa = g.truth.confounded_preferences(Domain::kA);
    const Mat pb = g.truth.confounded_preferences(Domain::kB);
    const auto cand = cdc_candidates(pa, pb, hsr_fit(pa, pb, 1.0));
    const Mat stacked = vstack({&cand.a_to_b, &cand.b_to_a});
    const auto top = oracle::top_eigenvector(oracle::row_covariance(stacked));
    const double cdc_cos = oracle::abs_cosine(top, g.truth.of_kind(ConfounderKind::kCrossDomain).front()->vector.row(0));
    double sdc_cos = 0.0;
    for (const auto* s : g.truth.of_kind(ConfounderKind::kSingleDomain)) {
      sdc_cos = std::max(sdc_cos, oracle::abs_cosine(top, s->vector.row(0)));
    }
    ok += cdc_cos > kCdcCosMin && sdc_cos < kSdcCosMax;
    detail += fmt::format("{}s{} {:.3f}/{:.3f}", detail.empty() ? "" : ", ", seed, cdc_cos, sdc_cos);
  }
  return {ok >= kMajority, fmt::format("{}/{} seeds, |cos| CDC/max SDC: {}", ok, kSeeds, detail)};
}

// ---------------------------------------------------------------- 5, 6
Outcome sdc_null_control() {
  int ok = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SpecificPairConfig pc;
    pc.beta_sd = 0.0;
    const auto p = generate_specific_pairs(pc, static_cast<std::uint64_t>(seed));
    const auto r = train_dual_adversarial(p.z_a, p.z_b, AdversarialConfig{}, static_cast<std::uint64_t>(seed));
    const auto cand = sdc_candidates(r.pair, p.z_a, p.z_b);
    const double ratio = (mean_row_l2(cand.a) + mean_row_l2(cand.b)) / (mean_row_l2(p.z_a) + mean_row_l2(p.z_b));
    ok += ratio < kNullRatioMax;
    detail += fmt::format("{}s{} {:.3f}", detail.empty() ? "" : ", ", seed, ratio);
  }
  return {ok >= kMajority, fmt::format("{}/{} seeds below {:.2f}, candidate/Z_spe norm ratio: {}", ok, kSeeds,
                                       kNullRatioMax, detail)};
}

Outcome cycle_efficacy() {
  int ok = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto p = generate_specific_pairs({}, static_cast<std::uint64_t>(seed));
    AdversarialConfig with;
    const auto r1 = train_dual_adversarial(p.z_a, p.z_b, with, static_cast<std::uint64_t>(seed));
    AdversarialConfig without = with;
    without.lambda = 0.0;
    const auto r0 = train_dual_adversarial(p.z_a, p.z_b, without, static_cast<std::uint64_t>(seed));
    const double shrink = r1.final_cycle() / r1.initial_cycle;
    ok += shrink < kCycleShrink && r1.final_cycle() < r0.final_cycle();
    detail += fmt::format("{}s{} {:.3f} ({:.3f} vs {:.3f})", detail.empty() ? "" : ", ", seed, shrink,
                          r1.final_cycle(), r0.final_cycle());
  }
  return {ok >= kMajority, fmt::format("{}/{} seeds, final/initial L_cyc (lambda=1 vs lambda=0 final): {}", ok,
                                       kSeeds, detail)};
}

// ---------------------------------------------------------------- 7
fs::path scratch_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("cd2cdr_acceptance_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double mean_hr(const MetricsReport& r) { return 0.5 * (r.a.hr + r.b.hr); }

// m = 1000 users, n = 2000 items per domain (generator defaults). Learning rate 0.01 from
// the grid, d = 16 and 10 fine-tuning epochs keep five paired runs inside the time budget.
PipelineConfig ablation_config(std::uint64_t seed) {
  PipelineConfig c;
  c.dim = 16;
  c.lr = 0.01;
  c.epochs_finetune = 10;
  // At weight 1 the planted effects move the true-logit oracle's HR@10 by about 0.01,
  // under the seed-to-seed spread; at 3 they move it by about 0.14.
  c.data.synthetic.beta_sd = kAblationConfounderWeight;
  c.data.synthetic.beta_cd = kAblationConfounderWeight;
  c.seed = seed;
  return c;
}

Outcome ablation_direction() {
  int ok = 0;
  std::string detail;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const fs::path root = scratch_dir("ablation_s" + std::to_string(seed));
    PipelineConfig full = ablation_config(static_cast<std::uint64_t>(seed));
    RunOptions fo;
    fo.out = root / "full";
    const auto rf = run_pipeline(full, fo);
    // the coarse variant shares the pretrained backbone
    PipelineConfig coarse = full;
    coarse.variant = Variant::kCoarse;
    fs::create_directories(root / "coarse" / "checkpoints");
    fs::copy(checkpoint_dir(fo.out, Stage::kPretrain), checkpoint_dir(root / "coarse", Stage::kPretrain),
             fs::copy_options::recursive);
    RunOptions co;
    co.out = root / "coarse";
    co.resume_after = Stage::kPretrain;
    const auto rc = run_pipeline(coarse, co);
    g_reports.push_back(*rf.report);
    g_reports.push_back(*rc.report);
    const double f = mean_hr(*rf.report), c = mean_hr(*rc.report);
    ok += f > c;
    detail += fmt::format("{}s{} {:.4f} vs {:.4f}", detail.empty() ? "" : ", ", seed, f, c);
    fs::remove_all(root);
  }
  return {ok >= kMajority, fmt::format("full beats coarse in {}/{} seeds, mean HR@10 over domains (full vs coarse): {}",
                                       ok, kSeeds, detail)};
}

// ---------------------------------------------------------------- 8
Outcome metric_correctness() {
  std::vector<std::string> fails;
  if (ndcg_at_k(3, 10) != 0.5) fails.push_back("NDCG@10 at rank 3 != 0.5");
  if (hr_at_k(10, 10) != 1 || hr_at_k(11, 10) != 0) fails.push_back("HR@10 boundary");
  if (ndcg_at_k(11, 10) != 0.0) fails.push_back("NDCG@10 beyond K");
  const std::vector<double> tie{0.5, 0.5, 0.9};
  if (rank_test_item(tie, 1) != 3) fails.push_back("tie rank");

  // random scorer: 1000 users, 999 negatives each
  LeaveOneOutSplit split;
  split.eval_negatives = 999;
  Rng rng(808);
  for (DomainSplit* d : {&split.a, &split.b}) {
    d->num_items = 1001;
    for (int u = 0; u < 1000; ++u) {
      d->train_items.push_back({1000});
      d->test_item.push_back(u % 1000);
      std::vector<int> neg;
      for (int i = 0; i < 1000; ++i)
        if (i != u % 1000) neg.push_back(i);
      d->eval_negatives.push_back(neg);
    }
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Scorer random = [&](Domain, int, std::span<const int>, std::span<double> out) {
    for (double& v : out) v = u01(rng);
  };
  const auto r = evaluate(random, split, 10, 1);
  g_reports.push_back(r);
  const double p = 10.0 / 1000.0, sigma = std::sqrt(p * (1 - p) / 1000.0);
  for (double hr : {r.a.hr, r.b.hr}) {
    if (std::abs(hr - p) > 3 * sigma) fails.push_back(fmt::format("random HR@10 {:.4f} outside {:.4f} +- 3 x {:.4f}", hr, p, sigma));
  }
  int checked = 0;
  for (const auto& rep : g_reports) {
    for (const DomainMetrics* m : {&rep.a, &rep.b}) {
      ++checked;
      if (m->ndcg > m->hr) fails.push_back("NDCG > HR in a report");
    }
  }
  std::string detail = fmt::format("rank-3 NDCG {:.3f}, random HR@10 A {:.4f} B {:.4f} (0.01 +- {:.4f}), NDCG <= HR on {} report rows",
                                   ndcg_at_k(3, 10), r.a.hr, r.b.hr, 3 * sigma, checked);
  for (const auto& f : fails) detail += "; " + f;
  return {fails.empty(), detail};
}

// ---------------------------------------------------------------- 9
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  PipelineConfig c;
  c.data.synthetic.users = 300;
  c.data.synthetic.items_a = 600;
  c.data.synthetic.items_b = 600;
  c.data.synthetic.density_a = 0.03;
  c.data.synthetic.density_b = 0.02;
  c.dim = 16;
  c.lr = 0.01;
  c.epochs_pretrain = 10;
  c.epochs_adversarial = 5;
  c.epochs_finetune = 3;
  c.seed = 909;
  std::string first;
  bool same = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = scratch_dir("determinism_" + std::to_string(run));
    RunOptions o;
    o.out = out;
    const auto r = run_pipeline(c, o);
    g_reports.push_back(*r.report);
    const std::string json = slurp(out / "report.json");
    if (run == 0) first = json;
    else same = json == first;
    fs::remove_all(out);
  }
  return {same && !first.empty(), fmt::format("two runs, seed {}, report.json {} ({} bytes)", c.seed,
                                              same ? "byte-identical" : "DIFFERS", first.size())};
}

// ---------------------------------------------------------------- 10
Outcome config_fidelity() {
  const PipelineConfig c;
  std::vector<std::string> bad;
  auto expect = [&](const char* name, double actual, double want) {
    if (actual != want) bad.push_back(fmt::format("{} = {} (want {})", name, actual, want));
  };
  expect("d", c.dim, 64);
  expect("batch", c.batch_size, 1024);
  expect("epochs.pretrain", c.epochs_pretrain, 50);
  expect("epochs.adversarial", c.epochs_adversarial, 30);
  expect("epochs.finetune", c.epochs_finetune, 20);
  expect("J_sd^A", c.j_sd_a, 10);
  expect("J_sd^B", c.j_sd_b, 10);
  expect("J_cd", c.j_cd, 10);
  expect("lambda", c.lambda, 1);
  expect("alpha", c.alpha, 1);
  expect("train negatives", c.train_negatives, 7);
  expect("eval negatives", c.eval_negatives, 999);
  expect("fusion dim", c.fusion_dim, 128);
  expect("final hidden", c.final_hidden, 8);
  if (c.prediction_hidden != std::vector<int>{32, 16}) bad.push_back("hidden layers != 32, 16");
  if (c.lr_grid != std::vector<double>{0.01, 0.005, 0.001, 0.0005, 0.0001}) bad.push_back("lr grid");
  std::string detail = "d=64, batch 1024, epochs 50/30/20, J=10, lambda=1, alpha=1, negatives 7/999, 128-32-16-8, lr grid";
  for (const auto& b : bad) detail += "; " + b;
  return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, selection_normalization}, {2, ridge_oracle},       {3, gradient_fidelity}, {4, cdc_recovery},
      {5, sdc_null_control},        {6, cycle_efficacy},     {7, ablation_direction}, {9, determinism},
      {8, metric_correctness},      {10, config_fidelity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2d: %s  [%.1fs] %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
