// Experiment driver checks: sweep resolution, spec validation, row schemas,
// the CSV contract, config parsing, and bit-exact reruns of every runner.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "abjam/bench.hpp"

using namespace abjam;

namespace {

// everything except the informational wall clock must reproduce
void require_same_rows(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].swept_name == b[i].swept_name);
    CHECK(a[i].swept_value == b[i].swept_value);
    CHECK(a[i].metric == b[i].metric);
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].std_error == b[i].std_error);
    CHECK(a[i].trials == b[i].trials);
    CHECK(a[i].seed == b[i].seed);
  }
}

SystemConfig tiny_config() {
  SystemConfig cfg;
  cfg.antennas = 2;
  cfg.spreading = 6;
  cfg.frame_bits = 12;
  cfg.pilot_bits = 4;
  return cfg;
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("experiment kinds have stable names") {
  CHECK(std::string(kind_name(ExperimentKind::RateVsTheta0)) == "rate-vs-theta0");
  CHECK(std::string(kind_name(ExperimentKind::RateVsSnr)) == "rate-vs-snr");
  CHECK(std::string(kind_name(ExperimentKind::BerVsSnr)) == "ber-vs-snr");
  CHECK(std::string(kind_name(ExperimentKind::BerVsBackscatterSnr)) ==
        "ber-vs-backscatter-snr");
  CHECK(std::string(kind_name(ExperimentKind::BerVsSpreading)) == "ber-vs-spreading");
  CHECK(std::string(kind_name(ExperimentKind::TrainDetector)) == "train-detector");
  CHECK(std::string(kind_name(ExperimentKind::EvalDetector)) == "eval-detector");
}

TEST_CASE("swept parameters convert at the boundary") {
  CHECK(sweepable_names().size() == 9);

  SystemConfig cfg;
  apply_swept_value(cfg, "alpha_jr_db", 7.0);
  CHECK(cfg.alpha_jr == doctest::Approx(5.011872336272722).epsilon(1e-15));
  apply_swept_value(cfg, "alpha_t_rel_db", -15.0);
  CHECK(cfg.alpha_t_rel == doctest::Approx(0.03162277660168379).epsilon(1e-15));
  apply_swept_value(cfg, "theta0", 0.3);
  CHECK(cfg.theta0 == 0.3);
  apply_swept_value(cfg, "antennas", 5.0);
  CHECK(cfg.antennas == 5);

  CHECK_THROWS_AS(apply_swept_value(cfg, "antennas", 5.5), ConfigError);
  CHECK_THROWS_AS(apply_swept_value(cfg, "spreading", 0.0), ConfigError);
  CHECK_THROWS_AS(apply_swept_value(cfg, "bogus", 1.0), ConfigError);
}

TEST_CASE("spec validation rejects inconsistent requests") {
  ExperimentSpec spec;
  spec.base = tiny_config();
  spec.trials = 10;
  CHECK_NOTHROW(spec.validate());

  ExperimentSpec bad = spec;
  bad.kind = ExperimentKind::RateVsTheta0;
  bad.swept_name = "alpha_jr_db";
  bad.swept_values = {1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.detector = "cnn";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.detector = "dl";  // no checkpoint
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.kind = ExperimentKind::EvalDetector;
  bad.detector = "ml";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.kind = ExperimentKind::TrainDetector;
  bad.symbols_per_frame = 100;  // larger than the data region
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.swept_name = "alpha_jr_db";  // no values
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = spec;
  bad.kind = ExperimentKind::RateVsSnr;
  bad.trials = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("runners refuse mismatched kinds") {
  ExperimentSpec spec;
  spec.base = tiny_config();
  spec.trials = 10;
  CHECK_THROWS_AS(run_rate_experiment(spec), ConfigError);
  spec.kind = ExperimentKind::RateVsSnr;
  CHECK_THROWS_AS(run_ber_experiment(spec), ConfigError);
  CHECK_THROWS_AS(run_training(spec), ConfigError);
}

TEST_CASE("likelihood BER sweep: schema, derived metric, determinism") {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::BerVsSnr;
  spec.base = tiny_config();
  spec.swept_name = "alpha_jr_db";
  spec.swept_values = {3.0, 9.0};
  spec.trials = 40;

  const std::vector<ResultRow> rows = run_ber_experiment(spec);
  REQUIRE(rows.size() == 4);  // ber + bits_per_rf_symbol per point
  CHECK(rows[0].swept_name == "alpha_jr_db");
  CHECK(rows[0].swept_value == 3.0);
  CHECK(rows[0].metric == "ber");
  CHECK(rows[1].metric == "bits_per_rf_symbol");
  CHECK(rows[2].swept_value == 9.0);
  CHECK(rows[0].trials == 40);
  CHECK(rows[0].seed == spec.base.seed);

  for (const auto& r : rows) {
    CHECK(r.value >= 0.0);
    CHECK(r.std_error >= 0.0);
  }
  CHECK(rows[0].value <= 1.0);

  // the throughput row is a fixed rescaling of the error row
  const double factor = 8.0 / (12.0 * 6.0);  // data bits / (frame bits * spreading)
  CHECK(rows[1].value == doctest::Approx((1.0 - rows[0].value) * factor).epsilon(1e-15));
  CHECK(rows[1].std_error == doctest::Approx(rows[0].std_error * factor).epsilon(1e-15));

  require_same_rows(rows, run_ber_experiment(spec));
}

TEST_CASE("a sweep-free BER run reports a single point named none") {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::BerVsSnr;
  spec.base = tiny_config();
  spec.trials = 10;
  const std::vector<ResultRow> rows = run_ber_experiment(spec);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].swept_name == "none");
  CHECK(rows[0].swept_value == 0.0);
}

TEST_CASE("prior sweep of the rate runner shares draws across the grid") {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::RateVsTheta0;
  spec.base = tiny_config();
  spec.swept_name = "theta0";
  spec.swept_values = {0.2, 0.5, 0.8};
  spec.trials = 300;       // MC samples per realization
  spec.realizations = 4;

  const std::vector<ResultRow> rows = run_rate_experiment(spec);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].metric == "mi_bits");
    CHECK(rows[i].swept_value == spec.swept_values[i]);
    // the trials column carries the statistical n behind the stderr
    CHECK(rows[i].trials == spec.realizations);
    CHECK(rows[i].value > -0.05);
    CHECK(rows[i].value < 1.0);
  }
  require_same_rows(rows, run_rate_experiment(spec));
}

TEST_CASE("gain sweep of the rate runner maximizes over the prior") {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::RateVsSnr;
  spec.base = tiny_config();
  spec.swept_name = "alpha_jr_db";
  spec.swept_values = {0.0, 6.0};
  spec.trials = 400;
  spec.realizations = 3;
  spec.grid_step = 0.25;

  const std::vector<ResultRow> rows = run_rate_experiment(spec);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].metric == "rate_bits");
  CHECK(rows[1].metric == "theta0_star");
  CHECK(rows[2].metric == "rate_bits");
  for (const auto& r : rows) CHECK(r.trials == spec.realizations);
  CHECK(rows[0].value >= 0.0);
  CHECK(rows[0].value <= 1.0);
  CHECK(rows[1].value > 0.0);
  CHECK(rows[1].value < 1.0);
  require_same_rows(rows, run_rate_experiment(spec));
}

TEST_CASE("training runner: dataset accounting, checkpoint, determinism") {
  TempFile ckpt("bench_test_checkpoint.json");

  ExperimentSpec spec;
  spec.kind = ExperimentKind::TrainDetector;
  spec.base = tiny_config();
  spec.base.spreading = 5;
  spec.base.frame_bits = 10;
  spec.train_frames = 25;
  spec.symbols_per_frame = 2;
  spec.train.hidden = 4;
  spec.train.epochs = 2;
  spec.train.batch_size = 16;
  spec.checkpoint = ckpt.path;

  const TrainOutput out = run_training(spec);
  CHECK(out.dataset_size == 50);
  CHECK(out.log.size() == spec.train.epochs + 1);
  CHECK(out.class0_fraction > 0.2);
  CHECK(out.class0_fraction < 0.8);
  CHECK(out.model.hidden == 4);
  CHECK(out.model.input_dim == 3);

  // the checkpoint landed and reloads to the same tensors
  const Checkpoint cp = load_checkpoint(ckpt.path);
  CHECK(cp.model.w_in == out.model.w_in);
  CHECK(cp.model.dense_w == out.model.dense_w);

  const TrainOutput again = run_training(spec);
  CHECK(again.model.w_in == out.model.w_in);
  CHECK(again.model.w_rec == out.model.w_rec);
  CHECK(again.class0_fraction == out.class0_fraction);

  const std::vector<ResultRow> log_rows = training_log_rows(spec, out);
  REQUIRE(log_rows.size() == 2 * out.log.size());
  CHECK(log_rows[0].swept_name == "epoch");
  CHECK(log_rows[0].metric == "train_loss");
  CHECK(log_rows[1].metric == "train_accuracy");
  CHECK(log_rows[0].value == out.log[0].loss);
  CHECK(log_rows.back().swept_value == double(spec.train.epochs));

  // the saved model drives the learned-detector evaluation path
  ExperimentSpec eval = spec;
  eval.kind = ExperimentKind::EvalDetector;
  eval.detector = "dl";
  eval.trials = 5;
  const std::vector<ResultRow> eval_rows = run_ber_experiment(eval);
  REQUIRE(eval_rows.size() == 2);
  CHECK(eval_rows[0].metric == "ber");
  CHECK(eval_rows[0].value >= 0.0);
  CHECK(eval_rows[0].value <= 1.0);
}

TEST_CASE("csv output format") {
  std::vector<ResultRow> rows;
  rows.push_back({"alpha_jr_db", 7.0, "ber", 1.0 / 3.0, 0.25, 100, 42, 1.23456});
  const std::string csv = csv_string(rows);

  const std::string header = "swept_name,swept_value,metric,value,stderr,trials,seed,wall_seconds";
  CHECK(csv.substr(0, header.size()) == header);
  // doubles carry 17 significant digits so reruns compare bit-exactly
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(csv.find(",100,42,") != std::string::npos);
  CHECK(csv.find("1.235\n") != std::string::npos);  // wall rounded to ms

  TempFile tmp("bench_test_rows.csv");
  write_csv(tmp.path, rows);
  std::ifstream in(tmp.path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == csv);
}

TEST_CASE("config files parse, apply, and reject unknown keys") {
  TempFile tmp("bench_test_config.cfg");
  {
    std::ofstream out(tmp.path);
    out << "# comment line\n";
    out << "antennas = 4\n";
    out << "alpha_jr_db = 10   # trailing comment\n";
    out << "theta0=0.25\n";
    out << "seed = 77\n";
    out << "trials = 123\n";
    out << "detector = ml\n";
    out << "sweep = spreading=10,25,50\n";
    out << "antennas = 6\n";  // last occurrence wins
  }

  const auto kv = parse_config_file(tmp.path);
  CHECK(kv.at("antennas") == "6");
  CHECK(kv.at("alpha_jr_db") == "10");

  ExperimentSpec spec;
  apply_config(spec, kv);
  CHECK(spec.base.antennas == 6);
  CHECK(spec.base.alpha_jr == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(spec.base.theta0 == 0.25);
  CHECK(spec.base.seed == 77);
  CHECK(spec.train.seed == 77);  // one master seed feeds training too
  CHECK(spec.trials == 123);
  CHECK(spec.swept_name == "spreading");
  CHECK(spec.swept_values == std::vector<double>{10.0, 25.0, 50.0});

  CHECK_THROWS_AS(apply_config(spec, {{"no_such_key", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(spec, {{"trials", "abc"}}), ConfigError);
  CHECK_THROWS_AS(apply_sweep_descriptor(spec, "garbage"), ConfigError);
  CHECK_THROWS_AS(apply_sweep_descriptor(spec, "bogus=1,2"), ConfigError);
  CHECK_THROWS_AS(apply_sweep_descriptor(spec, "theta0="), ConfigError);

  TempFile bad("bench_test_bad.cfg");
  {
    std::ofstream out(bad.path);
    out << "just words\n";
  }
  CHECK_THROWS_AS(parse_config_file(bad.path), ConfigError);
  CHECK_THROWS_AS(parse_config_file("missing_file.cfg"), ConfigError);
}

TEST_CASE("describe prints the resolved plan") {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::BerVsSnr;
  spec.swept_name = "alpha_jr_db";
  spec.swept_values = {1.0, 2.0};
  spec.trials = 10;
  const std::string text = describe(spec);
  CHECK(text.find("ber-vs-snr") != std::string::npos);
  CHECK(text.find("detector ml") != std::string::npos);
  CHECK(text.find("alpha_jr_db = 1 2") != std::string::npos);
  CHECK(text.find("5.0119 (7 dB)") != std::string::npos);  // default jammer gain
  CHECK(text.find("seed: 1") != std::string::npos);
  CHECK(text.find("2 point(s) x 10 frames") != std::string::npos);
}
