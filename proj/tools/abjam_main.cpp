// Command-line front end for the backscatter anti-jamming lab: rate and
// BER sweeps, detector training/evaluation, and a dry-run `describe` that
// prints the resolved plan.  All physical gains are entered in dB here and
// converted once, at this boundary.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "abjam/bench.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_path;
  std::string sweep;
  std::string detector;
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t realizations = 0;
  bool seed_set = false, trials_set = false, realizations_set = false;
};

void add_common_options(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (key = value lines)");
  cmd->add_option("--seed", args.seed, "master seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--trials", args.trials, "frames per point (BER) / MC samples (rate)")
      ->each([&](const std::string&) { args.trials_set = true; });
  cmd->add_option("--realizations", args.realizations, "channel draws per point (rate)")
      ->each([&](const std::string&) { args.realizations_set = true; });
  cmd->add_option("--out", args.out_path, "result CSV path (default: stdout)");
  cmd->add_option("--sweep", args.sweep, "swept parameter, e.g. alpha_jr_db=1,2,3");
  cmd->add_option("--detector", args.detector, "ml or dl (BER experiments)");
  cmd->add_option("--checkpoint", args.checkpoint, "model file to write (train) or read (dl)");
}

abjam::ExperimentKind infer_kind(const std::string& sub, const abjam::ExperimentSpec& spec) {
  using abjam::ExperimentKind;
  if (sub == "rate")
    return spec.swept_name == "theta0" ? ExperimentKind::RateVsTheta0
                                       : ExperimentKind::RateVsSnr;
  if (sub == "ber") {
    if (spec.swept_name == "alpha_t_rel_db" || spec.swept_name == "alpha_j_rel_db")
      return ExperimentKind::BerVsBackscatterSnr;
    if (spec.swept_name == "spreading") return ExperimentKind::BerVsSpreading;
    return ExperimentKind::BerVsSnr;
  }
  if (sub == "train") return ExperimentKind::TrainDetector;
  return ExperimentKind::EvalDetector;  // "eval"
}

abjam::ExperimentSpec build_spec(const std::string& sub, const CliArgs& args) {
  abjam::ExperimentSpec spec;
  if (!args.config_path.empty())
    abjam::apply_config(spec, abjam::parse_config_file(args.config_path));
  // flags override the file
  if (args.seed_set) {
    spec.base.seed = args.seed;
    spec.train.seed = args.seed;
  }
  if (args.trials_set) spec.trials = args.trials;
  if (args.realizations_set) spec.realizations = args.realizations;
  if (!args.detector.empty()) spec.detector = args.detector;
  if (!args.checkpoint.empty()) spec.checkpoint = args.checkpoint;
  if (!args.sweep.empty()) abjam::apply_sweep_descriptor(spec, args.sweep);

  if (sub == "eval") spec.detector = "dl";
  spec.kind = infer_kind(sub, spec);
  return spec;
}

void emit_rows(const std::string& out_path, const std::vector<abjam::ResultRow>& rows) {
  if (out_path.empty())
    std::cout << abjam::csv_string(rows);
  else
    abjam::write_csv(out_path, rows);
}

int run(const std::string& sub, const CliArgs& args, const std::string& describe_kind) {
  using abjam::ExperimentKind;
  if (sub == "describe") {
    const abjam::ExperimentSpec spec = build_spec(describe_kind, args);
    std::cout << abjam::describe(spec);
    return 0;
  }

  abjam::ExperimentSpec spec = build_spec(sub, args);
  if (sub == "rate") {
    emit_rows(args.out_path, abjam::run_rate_experiment(spec));
  } else if (sub == "ber" || sub == "eval") {
    emit_rows(args.out_path, abjam::run_ber_experiment(spec));
  } else {  // train
    if (spec.checkpoint.empty())
      throw abjam::ConfigError("train needs --checkpoint to store the model");
    const abjam::TrainOutput out = abjam::run_training(spec);
    std::fprintf(stderr, "dataset: %zu sequences, class-0 fraction %.4f\n",
                 out.dataset_size, out.class0_fraction);
    for (std::size_t k = 0; k < out.log.size(); ++k)
      std::fprintf(stderr, "epoch %zu: loss=%.6f accuracy=%.4f%s\n", k, out.log[k].loss,
                   out.log[k].accuracy, k == 0 ? " (before training)" : "");
    std::fprintf(stderr, "model written to %s\n", spec.checkpoint.c_str());
    if (!args.out_path.empty())
      abjam::write_csv(args.out_path, abjam::training_log_rows(spec, out));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ambient-backscatter anti-jamming laboratory"};
  app.require_subcommand(1);

  CliArgs args;
  std::string describe_kind = "ber";
  CLI::App* rate = app.add_subcommand("rate", "achievable-rate sweeps");
  CLI::App* ber = app.add_subcommand("ber", "detector BER sweeps");
  CLI::App* train = app.add_subcommand("train", "fit the learned detector");
  CLI::App* eval = app.add_subcommand("eval", "BER of a checkpointed detector");
  CLI::App* desc = app.add_subcommand("describe", "print the resolved experiment plan");
  for (CLI::App* cmd : {rate, ber, train, eval, desc}) add_common_options(cmd, args);
  desc->add_option("--kind", describe_kind, "experiment to describe: rate|ber|train|eval")
      ->check(CLI::IsMember({"rate", "ber", "train", "eval"}));

  CLI11_PARSE(app, argc, argv);

  try {
    return run(app.get_subcommands().front()->get_name(), args, describe_kind);
  } catch (const abjam::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
