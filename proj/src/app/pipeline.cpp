#include "cd2cdr/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cd2cdr/adversarial.hpp"
#include "cd2cdr/confounders.hpp"
#include "cd2cdr/deconfounder.hpp"
#include "cd2cdr/errors.hpp"

namespace cd2cdr {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double train_density(const DomainSplit& s) {
  const double cells = static_cast<double>(s.num_users()) * static_cast<double>(s.num_items);
  return cells > 0 ? static_cast<double>(s.num_train_interactions()) / cells : 0.0;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ParamList subspace_params(ConfounderSubspace& s) {
  return {{"subspace.sd.A", &s.sd_a},       {"subspace.sd.B", &s.sd_b},       {"subspace.cd", &s.cd},
          {"subspace.union.A", &s.union_a}, {"subspace.union.B", &s.union_b}, {"subspace.coarse.A", &s.coarse_a},
          {"subspace.coarse.B", &s.coarse_b}};
}

// Subspace blocks have data-dependent shapes, so they are read by name rather than
// restored into a preshaped skeleton.
ConfounderSubspace subspace_from(const Checkpoint& c) {
  ConfounderSubspace s;
  for (auto& p : subspace_params(s)) *p.value = c.block(p.name);
  return s;
}

// Everything a run carries between stages.
struct RunState {
  PreparedData data;
  PipelineConfig cfg;
  std::optional<BackboneParams> backbone;
  std::optional<ConfounderSubspace> subspace;
  std::optional<PredictionNetwork> net;
  std::map<std::string, double> diagnostics;
};

BackboneParams backbone_skeleton(const RunState& st) {
  return init_backbone(st.data.dataset, st.data.graphs, st.cfg.backbone_init(), derive_seed(st.cfg.seed, "pretrain.init"));
}

PredictionNetwork network_skeleton(const RunState& st) {
  return init_prediction_network(static_cast<std::size_t>(st.cfg.dim), st.cfg.prediction_init(),
                                 derive_seed(st.cfg.seed, "phase3.net"));
}

Checkpoint new_checkpoint(const RunState& st, Stage phase) {
  Checkpoint c;
  c.phase = std::string(stage_name(phase));
  c.config_hash = phase_config_hash(st.cfg, phase);
  c.attributes["variant"] = std::string(to_string(st.cfg.variant));
  c.attributes["mixture_normalization"] = std::string(to_string(st.cfg.mixture));
  c.attributes["sparser_domain"] = std::string(domain_name(st.data.graphs.sparser));
  c.scalars = st.diagnostics;
  return c;
}

Checkpoint load_phase(const RunState& st, const fs::path& out, Stage phase) {
  const fs::path dir = checkpoint_dir(out, phase);
  Checkpoint c = load_checkpoint(dir);
  if (c.phase != stage_name(phase)) {
    throw IntegrityError(fmt::format("checkpoint {} holds phase '{}', expected '{}'", dir.string(), c.phase,
                                     stage_name(phase)));
  }
  const std::string want = phase_config_hash(st.cfg, phase);
  if (c.config_hash != want) {
    throw IntegrityError(fmt::format("checkpoint {} was written for configuration {}, current is {}", dir.string(),
                                     c.config_hash, want));
  }
  return c;
}

void run_pretrain(RunState& st) {
  const auto& cfg = st.cfg;
  spdlog::info("phase 1: pretraining backbone (d={}, L={}, {} epochs)", cfg.dim, cfg.depth, cfg.epochs_pretrain);
  PretrainResult r =
      pretrain(st.data.dataset, st.data.split, cfg.backbone_init(), cfg.pretrain_config(), cfg.seed);
  if (!r.history.empty()) {
    const auto& last = r.history.back();
    st.diagnostics["pretrain.rec_loss_final"] = last.rec_loss;
    st.diagnostics["pretrain.disentangle_loss_final"] = last.disentangle_loss;
    spdlog::info("phase 1 done: rec loss {:.4f}, classifier accuracy {:.3f}", last.rec_loss, last.classifier_accuracy);
  }
  st.diagnostics["pretrain.classifier_accuracy"] =
      classifier_accuracy(r.params.classifier, r.bundle.specific(Domain::kA), r.bundle.specific(Domain::kB));
  st.backbone = std::move(r.params);
}

struct DisentangleTimes {
  double sdc = 0.0;
  double cdc = 0.0;
  double clustering = 0.0;
};

DisentangleTimes run_disentangle(RunState& st) {
  const auto& cfg = st.cfg;
  DisentangleTimes t;
  const PreferenceBundle bundle = backbone_forward(*st.backbone, st.data.graphs).bundle;
  CandidateConfounders cand;
  const Mat& za = bundle.specific(Domain::kA);
  const Mat& zb = bundle.specific(Domain::kB);

  if (uses_single_domain(cfg.variant)) {
    Stopwatch sw;
    const AdversarialConfig ac = cfg.adversarial_config();
    spdlog::info("phase 2: dual adversarial SDC extraction ({} epochs, lambda={})", ac.epochs, ac.lambda);
    AdversarialResult adv = train_dual_adversarial(za, zb, ac, derive_seed(cfg.seed, "phase2.adversarial"));
    SdcCandidates sdc = sdc_candidates(adv.pair, za, zb);
    cand.sdc_a = std::move(sdc.a);
    cand.sdc_b = std::move(sdc.b);
    st.diagnostics["adversarial.cycle_initial"] = adv.initial_cycle;
    st.diagnostics["adversarial.cycle_final"] = adv.final_cycle();
    st.diagnostics["adversarial.generator_loss"] = adv.final_losses.generator();
    st.diagnostics["adversarial.discriminator_loss"] = adv.final_losses.discriminator();
    st.diagnostics["sdc.mean_row_norm_ratio"] =
        0.5 * (mean_row_l2(cand.sdc_a) / std::max(mean_row_l2(za), 1e-300) +
               mean_row_l2(cand.sdc_b) / std::max(mean_row_l2(zb), 1e-300));
    // Independence check for the regression below: E_u*^X against the other domain's SDCs.
    st.diagnostics["independence.A"] = mean_abs_cross_correlation(bundle.users(Domain::kA), cand.sdc_b);
    st.diagnostics["independence.B"] = mean_abs_cross_correlation(bundle.users(Domain::kB), cand.sdc_a);
    spdlog::info("phase 2: cycle loss {:.4g} -> {:.4g}", adv.initial_cycle, adv.final_cycle());
    t.sdc = sw.seconds();
  }
  if (uses_cross_domain(cfg.variant)) {
    Stopwatch sw;
    spdlog::info("phase 2: half-sibling regression CDC extraction (alpha={})", cfg.alpha);
    cand.maps = hsr_fit(bundle.users(Domain::kA), bundle.users(Domain::kB), cfg.alpha);
    CdcCandidates cdc = cdc_candidates(bundle.users(Domain::kA), bundle.users(Domain::kB), cand.maps);
    cand.cdc_a_to_b = std::move(cdc.a_to_b);
    cand.cdc_b_to_a = std::move(cdc.b_to_a);
    t.cdc = sw.seconds();
  }
  Stopwatch sw;
  ConfounderSubspace s = build_subspaces(cand, cfg.subspace_sizes(), derive_seed(cfg.seed, "phase2.kmeans"));
  quantize_to_f32(subspace_params(s));
  spdlog::info("phase 2 done: |C^A|={}, |C^B|={}", s.union_a.rows(), s.union_b.rows());
  t.clustering = sw.seconds();
  st.subspace = std::move(s);
  return t;
}

DeconfoundedModel assemble(const RunState& st) {
  DeconfoundedModel m;
  m.backbone = *st.backbone;
  m.net = *st.net;
  m.contexts = make_contexts(*st.subspace, st.cfg.variant, st.cfg.mixture);
  return m;
}

void run_train(RunState& st) {
  const auto& cfg = st.cfg;
  spdlog::info("phase 3: backdoor fine-tuning ({} epochs, variant {})", cfg.epochs_finetune, to_string(cfg.variant));
  st.net = network_skeleton(st);
  DeconfoundedModel m = assemble(st);
  FinetuneResult r = finetune(m, st.data.split, cfg.finetune_config(), derive_seed(cfg.seed, "phase3"));
  ParamList all = m.backbone.params();
  append(all, m.net.params());
  quantize_to_f32(all);
  if (!r.loss_history.empty()) st.diagnostics["finetune.loss_final"] = r.loss_history.back();
  st.backbone = std::move(m.backbone);
  st.net = std::move(m.net);
}

MetricsReport run_evaluate(const RunState& st) {
  const DeconfoundedModel m = assemble(st);
  const PreferenceBundle bundle = backbone_forward(m.backbone, st.data.graphs).bundle;
  const Scorer scorer = [&](Domain d, int user, std::span<const int> items, std::span<double> out) {
    score_candidates(m, bundle, d, user, items, out);
  };
  MetricsReport report = evaluate(scorer, st.data.split, st.cfg.top_k, st.cfg.seed);
  report.variant = std::string(to_string(st.cfg.variant));
  report.diagnostics = st.diagnostics;
  report.diagnostics["data.train_density.A"] = train_density(st.data.split.a);
  report.diagnostics["data.train_density.B"] = train_density(st.data.split.b);
  return report;
}

void save_phase(const RunState& st, const fs::path& out, Stage phase) {
  Checkpoint c = new_checkpoint(st, phase);
  BackboneParams bb = *st.backbone;
  c.add_params(bb.params());
  if (phase >= Stage::kDisentangle) {
    ConfounderSubspace s = *st.subspace;
    c.add_params(subspace_params(s));
  }
  if (phase >= Stage::kTrain) {
    PredictionNetwork n = *st.net;
    c.add_params(n.params());
  }
  save_checkpoint(checkpoint_dir(out, phase), c);
}

void load_into(RunState& st, const fs::path& out, Stage phase) {
  const Checkpoint c = load_phase(st, out, phase);
  BackboneParams bb = backbone_skeleton(st);
  c.restore_params(bb.params());
  st.backbone = std::move(bb);
  if (phase >= Stage::kDisentangle) st.subspace = subspace_from(c);
  if (phase >= Stage::kTrain) {
    PredictionNetwork n = network_skeleton(st);
    c.restore_params(n.params());
    st.net = std::move(n);
  }
  st.diagnostics = c.scalars;
  spdlog::info("resumed from {}", checkpoint_dir(out, phase).string());
}

std::string timings_json(const std::vector<std::pair<std::string, double>>& t) {
  Json j = Json::object();
  for (const auto& [k, v] : t) j[k] = v;
  return j.dump(2) + "\n";
}

}  // namespace

PreparedData prepare_data(const PipelineConfig& cfg) {
  PreparedData p;
  if (cfg.data.source == DataSource::kSynthetic) {
    p.dataset = generate_synthetic(cfg.data.synthetic, derive_seed(cfg.seed, "data")).dataset;
  } else {
    DomainDataset a = load_domain_tsv(cfg.data.tsv_a, cfg.data.min_interactions);
    DomainDataset b = load_domain_tsv(cfg.data.tsv_b, cfg.data.min_interactions);
    if (!cfg.data.item_features_a.empty()) a.item_features = load_feature_file(cfg.data.item_features_a);
    if (!cfg.data.item_features_b.empty()) b.item_features = load_feature_file(cfg.data.item_features_b);
    p.dataset = align_domains(a, b);
  }
  p.split = leave_one_out_split(p.dataset, cfg.eval_negatives, derive_seed(cfg.seed, "split"));
  p.graphs = build_graphs(p.split);
  return p;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kNone: return "none";
    case Stage::kPretrain: return "pretrain";
    case Stage::kDisentangle: return "disentangle";
    case Stage::kTrain: return "train";
    case Stage::kEvaluate: return "evaluate";
  }
  return "?";
}

std::string phase_config_hash(const PipelineConfig& cfg, Stage phase) {
  PipelineConfig c = cfg;
  const PipelineConfig defaults;
  if (phase < Stage::kTrain) {
    c.mixture = defaults.mixture;
    c.epochs_finetune = defaults.epochs_finetune;
    c.fusion_dim = defaults.fusion_dim;
    c.prediction_hidden = defaults.prediction_hidden;
    c.final_hidden = defaults.final_hidden;
    c.selection_dim = defaults.selection_dim;
  }
  if (phase < Stage::kDisentangle) {
    c.variant = defaults.variant;
    c.epochs_adversarial = defaults.epochs_adversarial;
    c.j_sd_a = defaults.j_sd_a;
    c.j_sd_b = defaults.j_sd_b;
    c.j_cd = defaults.j_cd;
    c.lambda = defaults.lambda;
    c.alpha = defaults.alpha;
    c.adversarial_batch_size = defaults.adversarial_batch_size;
    c.adversarial_lr = defaults.adversarial_lr;
    c.adversarial_final_lr_fraction = defaults.adversarial_final_lr_fraction;
    c.adversarial_init = defaults.adversarial_init;
  }
  // Evaluation settings never touch trained state.
  c.top_k = defaults.top_k;
  return config_hash(c);
}

fs::path checkpoint_dir(const fs::path& out, Stage phase) {
  return out / "checkpoints" / fmt::format("phase{}", static_cast<int>(phase));
}

RunOutcome run_pipeline(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  if (opt.out.empty()) throw std::invalid_argument("run_pipeline: output directory required");
  if (opt.stop_after <= opt.resume_after) throw std::invalid_argument("run_pipeline: nothing to run");
  const Stage first = static_cast<Stage>(static_cast<int>(opt.resume_after) + 1);
  if (!opt.force && first <= Stage::kTrain && fs::exists(checkpoint_dir(opt.out, first) / "manifest.json")) {
    throw std::runtime_error(fmt::format("{} already holds a {} checkpoint; pass --force to replace it",
                                         opt.out.string(), stage_name(first)));
  }
  fs::create_directories(opt.out);
  write_text(opt.out / "config.json", to_json(cfg));

  std::vector<std::pair<std::string, double>> timings{{"data", 0.0},        {"pretrain", 0.0},
                                                      {"disentangle_sdc", 0.0}, {"disentangle_cdc", 0.0},
                                                      {"clustering", 0.0},  {"finetune", 0.0},
                                                      {"evaluate", 0.0},    {"total", 0.0}};
  auto set_time = [&](const char* key, double v) {
    for (auto& [k, t] : timings) {
      if (k == key) t = v;
    }
  };
  Stopwatch total;
  RunState st;
  st.cfg = cfg;
  {
    Stopwatch sw;
    st.data = prepare_data(cfg);
    set_time("data", sw.seconds());
    spdlog::info("data: {} users, {} / {} items, train density A {:.4f} B {:.4f}", st.data.dataset.num_users(),
                 st.data.split.a.num_items, st.data.split.b.num_items, train_density(st.data.split.a),
                 train_density(st.data.split.b));
  }
  if (opt.resume_after != Stage::kNone) load_into(st, opt.out, opt.resume_after);

  auto wants = [&](Stage s) { return s > opt.resume_after && s <= opt.stop_after; };
  if (wants(Stage::kPretrain)) {
    Stopwatch sw;
    run_pretrain(st);
    set_time("pretrain", sw.seconds());
    save_phase(st, opt.out, Stage::kPretrain);
  }
  if (wants(Stage::kDisentangle)) {
    const DisentangleTimes t = run_disentangle(st);
    set_time("disentangle_sdc", t.sdc);
    set_time("disentangle_cdc", t.cdc);
    set_time("clustering", t.clustering);
    save_phase(st, opt.out, Stage::kDisentangle);
  }
  if (wants(Stage::kTrain)) {
    Stopwatch sw;
    run_train(st);
    set_time("finetune", sw.seconds());
    save_phase(st, opt.out, Stage::kTrain);
  }
  RunOutcome outcome;
  if (wants(Stage::kEvaluate)) {
    Stopwatch sw;
    MetricsReport report = run_evaluate(st);
    set_time("evaluate", sw.seconds());
    set_time("total", total.seconds());
    write_text(opt.out / "report.json", report.to_json());
    write_text(opt.out / "metrics.csv", report.to_csv());
    std::string table = report.to_table() + "timings (s):\n";
    for (const auto& [k, v] : timings) table += fmt::format("  {:<16}{:>10.3f}\n", k, v);
    write_text(opt.out / "report.txt", table);
    spdlog::info("evaluation: HR@{} A {:.4f} B {:.4f}, NDCG@{} A {:.4f} B {:.4f}", report.k, report.a.hr,
                 report.b.hr, report.k, report.a.ndcg, report.b.ndcg);
    outcome.report = std::move(report);
  }
  set_time("total", total.seconds());
  write_text(opt.out / "timings.json", timings_json(timings));
  outcome.timings = timings;
  return outcome;
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kJ: return "J";
    case SweepParam::kLambda: return "lambda";
    case SweepParam::kAlpha: return "alpha";
  }
  return "?";
}

SweepParam sweep_param_from_string(std::string_view s) {
  if (s == "J" || s == "j") return SweepParam::kJ;
  if (s == "lambda") return SweepParam::kLambda;
  if (s == "alpha") return SweepParam::kAlpha;
  throw std::invalid_argument("unknown sweep parameter '" + std::string(s) + "' (J|lambda|alpha)");
}

std::vector<double> sweep_preset(SweepParam p) {
  switch (p) {
    case SweepParam::kJ: return {2, 5, 10, 20, 50};
    case SweepParam::kLambda: return {0.1, 1, 2, 5, 10};
    case SweepParam::kAlpha: return {0.1, 1, 10, 20, 50};
  }
  return {};
}

PipelineConfig with_sweep_value(PipelineConfig cfg, SweepParam p, double value) {
  switch (p) {
    case SweepParam::kJ: {
      const auto j = static_cast<int>(std::lround(value));
      if (j < 1 || std::abs(value - j) > 1e-9) throw std::invalid_argument("J sweep values must be positive integers");
      cfg.j_sd_a = cfg.j_sd_b = cfg.j_cd = j;
      break;
    }
    case SweepParam::kLambda: cfg.lambda = value; break;
    case SweepParam::kAlpha: cfg.alpha = value; break;
  }
  return cfg;
}

std::vector<SweepEntry> run_sweep(const PipelineConfig& cfg, SweepParam p, const std::vector<double>& values,
                                  const fs::path& out, bool force) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  std::vector<SweepEntry> entries;
  std::optional<fs::path> phase1;
  for (double v : values) {
    SweepEntry e;
    e.value = v;
    const fs::path dir = out / fmt::format("{}_{}", to_string(p), v);
    try {
      const PipelineConfig c = with_sweep_value(cfg, p, v);
      RunOptions opt;
      opt.out = dir;
      opt.force = force;
      if (phase1) {
        // Pretraining does not depend on the swept parameter.
        const fs::path dst = checkpoint_dir(dir, Stage::kPretrain);
        fs::remove_all(dst);
        fs::create_directories(dst.parent_path());
        fs::copy(*phase1, dst, fs::copy_options::recursive);
        opt.resume_after = Stage::kPretrain;
        opt.force = true;
      } else if (!force && fs::exists(dir / "report.json")) {
        throw std::runtime_error(dir.string() + " already holds a report; pass --force to replace it");
      }
      RunOutcome r = run_pipeline(c, opt);
      e.report = std::move(r.report);
      if (!phase1) phase1 = checkpoint_dir(dir, Stage::kPretrain);
    } catch (const std::exception& ex) {
      e.error = ex.what();
      spdlog::error("sweep {}={} failed: {}", to_string(p), v, ex.what());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string sweep_csv(const PipelineConfig& cfg, SweepParam p, const std::vector<SweepEntry>& entries, int k) {
  std::ostringstream os;
  os << "parameter,value,seed,variant,domain,metric,score,status\n";
  for (const auto& e : entries) {
    std::string status = "ok";
    if (!e.report) {
      status = "failed: " + e.error;
      for (char& ch : status) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
      }
    }
    for (Domain d : kDomains) {
      for (const char* metric : {"HR", "NDCG"}) {
        std::string score;
        if (e.report) {
          const auto& m = e.report->domain(d);
          score = fmt::format("{:.6f}", std::string_view(metric) == "HR" ? m.hr : m.ndcg);
        }
        os << fmt::format("{},{},{},{},{},{}@{},{},{}\n", to_string(p), e.value, cfg.seed, to_string(cfg.variant),
                          domain_name(d), metric, k, score, status);
      }
    }
  }
  return os.str();
}

SyntheticData cmd_gen(const PipelineConfig& cfg, const fs::path& out, bool force) {
  const std::vector<fs::path> targets{out / "A.tsv", out / "B.tsv", out / "ground_truth.json", out / "ground_truth"};
  if (!force) {
    for (const auto& t : targets) {
      if (fs::exists(t)) throw std::runtime_error(t.string() + " exists; pass --force to overwrite");
    }
  }
  SyntheticData data = generate_synthetic(cfg.data.synthetic, derive_seed(cfg.seed, "data"));
  fs::create_directories(out);
  write_domain_tsv(out / "A.tsv", data.dataset.a);
  write_domain_tsv(out / "B.tsv", data.dataset.b);
  if (data.dataset.a.item_features) write_feature_file(out / "A.features", *data.dataset.a.item_features);
  if (data.dataset.b.item_features) write_feature_file(out / "B.features", *data.dataset.b.item_features);

  const auto& gt = data.truth;
  Checkpoint mats;
  mats.phase = "ground_truth";
  mats.config_hash = config_hash(cfg);
  mats.add("shared_preference", gt.shared_preference);
  mats.add("specific.A", gt.specific_a);
  mats.add("specific.B", gt.specific_b);
  mats.add("true_preference.A", gt.true_preference_a);
  mats.add("true_preference.B", gt.true_preference_b);
  mats.add("item_factors.A", gt.item_factors_a);
  mats.add("item_factors.B", gt.item_factors_b);

  auto mask = [](const std::vector<std::uint8_t>& m) {
    Mat r(1, m.size());
    for (std::size_t i = 0; i < m.size(); ++i) r[i] = m[i];
    return r;
  };
  Json manifest;
  manifest["seed"] = cfg.seed;
  manifest["confounder_free"] = gt.confounder_free;
  manifest["users"] = data.dataset.num_users();
  manifest["items"] = {{"A", data.dataset.a.num_items()}, {"B", data.dataset.b.num_items()}};
  manifest["density"] = {{"A", gt.realized_density_a}, {"B", gt.realized_density_b}};
  manifest["bias"] = {{"A", gt.bias_a}, {"B", gt.bias_b}};
  manifest["synthetic"] = Json::parse(to_json(cfg))["data"]["synthetic"];
  manifest["confounders"] = Json::array();
  for (std::size_t i = 0; i < gt.confounders.size(); ++i) {
    const auto& c = gt.confounders[i];
    const std::string base = fmt::format("confounder.{}", i);
    mats.add(base + ".vector", c.vector);
    mats.add(base + ".user_exposed", mask(c.user_exposed));
    mats.add(base + ".item_exposed.A", mask(c.item_exposed_a));
    mats.add(base + ".item_exposed.B", mask(c.item_exposed_b));
    Json jc;
    jc["kind"] = c.kind == ConfounderKind::kCrossDomain ? "cross_domain" : "single_domain";
    if (c.kind == ConfounderKind::kSingleDomain) jc["domain"] = std::string(domain_name(c.domain));
    jc["weight"] = c.weight;
    jc["blocks"] = base;
    manifest["confounders"].push_back(jc);
  }
  manifest["matrices"] = "ground_truth";
  save_checkpoint(out / "ground_truth", mats);
  write_text(out / "ground_truth.json", manifest.dump(2) + "\n");
  spdlog::info("gen: {} users, density A {:.4f} B {:.4f}, {} confounders{}", data.dataset.num_users(),
               gt.realized_density_a, gt.realized_density_b, gt.confounders.size(),
               gt.confounder_free ? " (confounder-free control)" : "");
  return data;
}

}  // namespace cd2cdr
