#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cd2cdr/config.hpp"
#include "cd2cdr/errors.hpp"
#include "cd2cdr/pipeline.hpp"

using namespace cd2cdr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("cd2cdr_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

// A pipeline small enough to run in well under a second.
PipelineConfig tiny() {
  PipelineConfig c;
  auto& s = c.data.synthetic;
  s.users = 60;
  s.items_a = 80;
  s.items_b = 70;
  s.latent_dim = 4;
  s.sdc_a = 1;
  s.sdc_b = 1;
  s.cdc = 1;
  s.density_a = 0.08;
  s.density_b = 0.08;
  c.dim = 8;
  c.epochs_pretrain = 2;
  c.epochs_adversarial = 2;
  c.epochs_finetune = 2;
  c.batch_size = 128;
  c.lr = 0.01;
  c.eval_negatives = 20;
  c.j_sd_a = c.j_sd_b = c.j_cd = 2;
  c.fusion_dim = 8;
  c.prediction_hidden = {4};
  c.final_hidden = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults match the reference settings") {
    const PipelineConfig c;
    struct Row {
      const char* name;
      double actual;
      double expected;
    };
    const Row rows[] = {
        {"dim", double(c.dim), 64},
        {"depth", double(c.depth), 2},
        {"batch_size", double(c.batch_size), 1024},
        {"epochs.pretrain", double(c.epochs_pretrain), 50},
        {"epochs.adversarial", double(c.epochs_adversarial), 30},
        {"epochs.finetune", double(c.epochs_finetune), 20},
        {"lr", c.lr, 0.001},
        {"j_sd_a", double(c.j_sd_a), 10},
        {"j_sd_b", double(c.j_sd_b), 10},
        {"j_cd", double(c.j_cd), 10},
        {"lambda", c.lambda, 1},
        {"alpha", c.alpha, 1},
        {"train_negatives", double(c.train_negatives), 7},
        {"eval_negatives", double(c.eval_negatives), 999},
        {"top_k", double(c.top_k), 10},
        {"fusion_dim", double(c.fusion_dim), 128},
        {"final_hidden", double(c.final_hidden), 8},
    };
    for (const auto& r : rows) {
      INFO(r.name);
      CHECK(r.actual == r.expected);
    }
    CHECK(c.prediction_hidden == std::vector<int>{32, 16});
    CHECK(c.lr_grid == std::vector<double>{0.01, 0.005, 0.001, 0.0005, 0.0001});
    CHECK(c.variant == Variant::kFull);
    CHECK(c.mixture == MixtureNormalization::kLiteral);
    const auto pi = c.prediction_init();
    CHECK(pi.fusion_dim == 128);
    CHECK(pi.final_hidden == 8);
    CHECK(c.subspace_sizes().cd == 10);
    CHECK(c.adversarial_config().lambda == 1.0);
    PipelineConfig cyc;
    cyc.variant = Variant::kCycle;
    CHECK(cyc.adversarial_config().lambda == 0.0);
  }

  TEST_CASE("JSON round trip and partial overrides") {
    PipelineConfig c = tiny();
    c.variant = Variant::kCoarse;
    c.mixture = MixtureNormalization::kRenormalized;
    c.data.synthetic.beta_cd = 1.5;
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(back).size() == 16);

    const auto part = config_from_json(R"({"lambda": 5, "epochs": {"finetune": 3}})");
    CHECK(part.lambda == 5.0);
    CHECK(part.epochs_finetune == 3);
    CHECK(part.epochs_pretrain == 50);
    CHECK(config_hash(part) != config_hash(PipelineConfig{}));
  }

  TEST_CASE("invalid configurations are rejected with the field named") {
    CHECK_THROWS_AS(config_from_json("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json("[1, 2]"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"dim": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"alpha": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"eta": 1.5})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"dim": "big"})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"variant": "partial"})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"data": {"source": "tsv"}})"), std::invalid_argument);
    try {
      config_from_json(R"({"lamda": 2})");
      FAIL("misspelt key accepted");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("lamda") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json(R"({"epochs": {"pretrian": 2}})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"data": {"synthetic": {"user": 5}}})"), std::invalid_argument);
  }

  TEST_CASE("phase hashes ignore knobs the phase does not read") {
    const PipelineConfig base = tiny();
    PipelineConfig v = base;
    v.variant = Variant::kCoarse;
    v.lambda = 7;
    v.alpha = 3;
    v.j_cd = 5;
    CHECK(phase_config_hash(v, Stage::kPretrain) == phase_config_hash(base, Stage::kPretrain));
    CHECK(phase_config_hash(v, Stage::kDisentangle) != phase_config_hash(base, Stage::kDisentangle));
    PipelineConfig m = base;
    m.mixture = MixtureNormalization::kRenormalized;
    m.epochs_finetune = 9;
    CHECK(phase_config_hash(m, Stage::kDisentangle) == phase_config_hash(base, Stage::kDisentangle));
    CHECK(phase_config_hash(m, Stage::kTrain) != phase_config_hash(base, Stage::kTrain));
    PipelineConfig k = base;
    k.top_k = 20;
    for (Stage s : {Stage::kPretrain, Stage::kDisentangle, Stage::kTrain}) {
      CHECK(phase_config_hash(k, s) == phase_config_hash(base, s));
    }
    PipelineConfig d = base;
    d.dim = 16;
    CHECK(phase_config_hash(d, Stage::kPretrain) != phase_config_hash(base, Stage::kPretrain));
  }
}

TEST_SUITE("checkpoint") {
  Checkpoint sample() {
    Checkpoint c;
    c.config_hash = "0123456789abcdef";
    c.phase = "pretrain";
    c.add("emb/users A", Mat(2, 3, {1, 2.5, -3, 0.1, 1e-7, 7}));
    c.add("empty", Mat(0, 4));
    c.scalars["cycle"] = 0.125;
    c.attributes["variant"] = "full";
    return c;
  }

  TEST_CASE("save, load, save is byte-identical") {
    TempDir t1("ckpt1"), t2("ckpt2");
    save_checkpoint(t1.path, sample());
    const auto loaded = load_checkpoint(t1.path);
    CHECK(loaded.phase == "pretrain");
    CHECK(loaded.scalar("cycle") == 0.125);
    CHECK(loaded.attribute("variant") == "full");
    CHECK(loaded.block("empty").rows() == 0);
    CHECK(loaded.block("emb/users A")(0, 1) == 2.5);
    // stored as f32
    CHECK(loaded.block("emb/users A")(1, 0) == static_cast<double>(0.1f));
    save_checkpoint(t2.path, loaded);
    CHECK(dir_bytes(t1.path) == dir_bytes(t2.path));
    CHECK(blob_file_name("emb/users A") == "emb_users_A.f32");
  }

  TEST_CASE("duplicate and missing names") {
    Checkpoint c = sample();
    CHECK_THROWS(c.add("empty", Mat(1, 1)));
    CHECK_THROWS_AS(c.block("nope"), IntegrityError);
    Mat target(3, 2);
    ParamList wrong{{"emb/users A", &target}};
    CHECK_THROWS_AS(c.restore_params(wrong), IntegrityError);
    Mat ok(2, 3);
    c.restore_params({{"emb/users A", &ok}});
    CHECK(ok(0, 2) == -3);
  }

  TEST_CASE("truncated blob is reported with the block name") {
    TempDir t("ckpt_trunc");
    save_checkpoint(t.path, sample());
    const auto blob = t.path / blob_file_name("emb/users A");
    fs::resize_file(blob, fs::file_size(blob) - 4);
    try {
      load_checkpoint(t.path);
      FAIL("truncated blob accepted");
    } catch (const IntegrityError& e) {
      CHECK(std::string(e.what()).find("emb/users A") != std::string::npos);
    }
    fs::remove(blob);
    CHECK_THROWS_AS(load_checkpoint(t.path), IntegrityError);
  }

  TEST_CASE("manifest edits: shape mismatch, version, malformed JSON, missing manifest") {
    TempDir t("ckpt_manifest");
    save_checkpoint(t.path, sample());
    const auto manifest = t.path / "manifest.json";
    auto j = nlohmann::json::parse(slurp(manifest));
    for (auto& b : j["blocks"]) {
      if (b["name"] == "emb/users A") b["rows"] = 3;
    }
    std::ofstream(manifest) << j.dump();
    CHECK_THROWS_AS(load_checkpoint(t.path), IntegrityError);

    save_checkpoint(t.path, sample());
    j = nlohmann::json::parse(slurp(manifest));
    j["version"] = kCheckpointVersion + 1;
    std::ofstream(manifest) << j.dump();
    CHECK_THROWS_AS(load_checkpoint(t.path), IntegrityError);

    std::ofstream(manifest) << "{ truncated";
    CHECK_THROWS_AS(load_checkpoint(t.path), IntegrityError);
    fs::remove(manifest);
    CHECK_THROWS_AS(load_checkpoint(t.path), IntegrityError);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("stages, overwrite refusal, resume and config mismatch") {
    TempDir t("pipe");
    const auto cfg = tiny();
    RunOptions opt;
    opt.out = t.path;
    const auto full = run_pipeline(cfg, opt);
    REQUIRE(full.report);
    for (const char* f : {"config.json", "report.json", "report.txt", "metrics.csv", "timings.json"}) {
      CHECK(fs::exists(t.path / f));
    }
    for (Stage s : {Stage::kPretrain, Stage::kDisentangle, Stage::kTrain}) {
      CHECK(fs::exists(checkpoint_dir(t.path, s) / "manifest.json"));
    }
    std::vector<std::string> keys;
    for (const auto& [k, v] : full.timings) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"data", "pretrain", "disentangle_sdc", "disentangle_cdc", "clustering",
                                           "finetune", "evaluate", "total"});
    CHECK(full.report->diagnostics.count("adversarial.cycle_final") == 1);
    const std::string first = slurp(t.path / "report.json");
    CHECK(first.find("timings") == std::string::npos);

    CHECK_THROWS_AS(run_pipeline(cfg, opt), std::runtime_error);

    // resume after phase 2 reproduces the uninterrupted report
    RunOptions resume = opt;
    resume.resume_after = Stage::kDisentangle;
    resume.force = true;
    run_pipeline(cfg, resume);
    CHECK(slurp(t.path / "report.json") == first);

    // a changed phase-2 knob no longer matches the stored phase-2 checkpoint
    PipelineConfig other = cfg;
    other.lambda = 4;
    CHECK_THROWS_AS(run_pipeline(other, resume), IntegrityError);
    // but the phase-1 checkpoint still applies
    RunOptions after1 = resume;
    after1.resume_after = Stage::kPretrain;
    CHECK(run_pipeline(other, after1).report.has_value());

    RunOptions bad = opt;
    bad.resume_after = Stage::kTrain;
    bad.stop_after = Stage::kTrain;
    CHECK_THROWS_AS(run_pipeline(cfg, bad), std::invalid_argument);
  }

  TEST_CASE("stage-by-stage runs match a single pipeline run") {
    TempDir a("pipe_whole"), b("pipe_steps");
    const auto cfg = tiny();
    RunOptions whole;
    whole.out = a.path;
    run_pipeline(cfg, whole);
    Stage prev = Stage::kNone;
    for (Stage s : {Stage::kPretrain, Stage::kDisentangle, Stage::kTrain, Stage::kEvaluate}) {
      RunOptions step;
      step.out = b.path;
      step.resume_after = prev;
      step.stop_after = s;
      run_pipeline(cfg, step);
      prev = s;
    }
    CHECK(slurp(a.path / "report.json") == slurp(b.path / "report.json"));
  }
}

TEST_SUITE("sweep") {
  TEST_CASE("presets, value application and parsing") {
    CHECK(sweep_preset(SweepParam::kJ) == std::vector<double>{2, 5, 10, 20, 50});
    CHECK(sweep_preset(SweepParam::kLambda) == std::vector<double>{0.1, 1, 2, 5, 10});
    CHECK(sweep_preset(SweepParam::kAlpha) == std::vector<double>{0.1, 1, 10, 20, 50});
    const auto j = with_sweep_value(PipelineConfig{}, SweepParam::kJ, 20);
    CHECK(j.j_sd_a == 20);
    CHECK(j.j_sd_b == 20);
    CHECK(j.j_cd == 20);
    CHECK(with_sweep_value(PipelineConfig{}, SweepParam::kAlpha, 50).alpha == 50);
    CHECK(with_sweep_value(PipelineConfig{}, SweepParam::kLambda, 0.1).lambda == 0.1);
    CHECK_THROWS_AS(with_sweep_value(PipelineConfig{}, SweepParam::kJ, 2.5), std::invalid_argument);
    for (SweepParam p : {SweepParam::kJ, SweepParam::kLambda, SweepParam::kAlpha}) {
      CHECK(sweep_param_from_string(to_string(p)) == p);
    }
    CHECK_THROWS_AS(sweep_param_from_string("eta"), std::invalid_argument);
  }

  TEST_CASE("two-value sweep: one directory per value, CSV has |values| x 4 rows, failures recorded") {
    TempDir t("sweep");
    const auto cfg = tiny();
    // J = 500 exceeds the candidate count and fails in clustering; the sweep carries on
    const std::vector<double> values{2, 500, 3};
    const auto entries = run_sweep(cfg, SweepParam::kJ, values, t.path, false);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].report.has_value());
    CHECK_FALSE(entries[1].report.has_value());
    CHECK_FALSE(entries[1].error.empty());
    CHECK(entries[2].report.has_value());
    const std::string csv = sweep_csv(cfg, SweepParam::kJ, entries, 10);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "parameter,value,seed,variant,domain,metric,score,status");
    int rows = 0, failed = 0;
    while (std::getline(in, line)) {
      ++rows;
      failed += line.find("failed") != std::string::npos;
    }
    CHECK(rows == 12);
    CHECK(failed == 4);
    CHECK(fs::exists(t.path / "J_2" / "report.json"));
    // refusing to clobber an existing sweep
    CHECK_THROWS(run_sweep(cfg, SweepParam::kJ, {2}, t.path, false).at(0).report.value());
  }
}

TEST_SUITE("gen") {
  TEST_CASE("writes data and ground truth; refuses to overwrite; flags the control") {
    TempDir t("gen");
    PipelineConfig cfg = tiny();
    cmd_gen(cfg, t.path, false);
    for (const char* f : {"A.tsv", "B.tsv", "ground_truth.json"}) CHECK(fs::exists(t.path / f));
    CHECK(fs::exists(t.path / "ground_truth" / "manifest.json"));
    auto gt = nlohmann::json::parse(slurp(t.path / "ground_truth.json"));
    CHECK(gt["confounder_free"] == false);
    CHECK(gt["confounders"].size() == 3);
    CHECK_THROWS_AS(cmd_gen(cfg, t.path, false), std::runtime_error);

    cfg.data.synthetic.beta_sd = cfg.data.synthetic.beta_cd = 0.0;
    cmd_gen(cfg, t.path, true);
    gt = nlohmann::json::parse(slurp(t.path / "ground_truth.json"));
    CHECK(gt["confounder_free"] == true);

    // the written TSVs load back through the TSV source path
    PipelineConfig tsv = tiny();
    tsv.data.source = DataSource::kTsv;
    tsv.data.tsv_a = (t.path / "A.tsv").string();
    tsv.data.tsv_b = (t.path / "B.tsv").string();
    tsv.data.min_interactions = 1;
    const auto prepared = prepare_data(tsv);
    CHECK(prepared.dataset.num_users() > 0);
  }
}
