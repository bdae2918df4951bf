#pragma once
// Experiment drivers: parameter sweeps for achievable rate and BER, plus
// detector training, all reproducible from one master seed.  Results land
// in a fixed CSV schema (swept_name, swept_value, metric, value, stderr,
// trials, seed, wall_seconds); wall time is informational only, every
// other column is bit-stable for a fixed spec.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "abjam/channel.hpp"
#include "abjam/lstm.hpp"

namespace abjam {

enum class ExperimentKind {
  RateVsTheta0,         // mutual information per swept prior
  RateVsSnr,            // prior-optimized rate per swept link gain
  BerVsSnr,             // detector BER per swept direct-path gain
  BerVsBackscatterSnr,  // detector BER per swept relative tag gain
  BerVsSpreading,       // detector BER per swept spreading factor
  TrainDetector,        // build a training set and fit the classifier
  EvalDetector,         // BER of a checkpointed classifier
};

const char* kind_name(ExperimentKind kind);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::BerVsSnr;
  SystemConfig base;
  std::string swept_name;            // empty => single point, reported as "none"
  std::vector<double> swept_values;
  std::size_t trials = 10000;        // frames per point (BER), MC samples (rate)
  std::size_t realizations = 100;    // channel draws per point (rate)
  double grid_step = 0.01;           // prior grid for the rate maximization
  std::string detector = "ml";      // "ml" (likelihood) or "dl" (learned)
  std::string checkpoint;            // model file: output (train) / input (dl eval)
  TrainConfig train;
  std::size_t train_frames = 10000;  // frames synthesized for the training set
  std::size_t symbols_per_frame = 2; // data symbols kept per training frame

  void validate() const;
};

struct ResultRow {
  std::string swept_name;
  double swept_value = 0.0;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// parameters a sweep may range over (dB names convert at this boundary)
const std::vector<std::string>& sweepable_names();
void apply_swept_value(SystemConfig& cfg, const std::string& name, double value);

std::vector<ResultRow> run_rate_experiment(const ExperimentSpec& spec);
std::vector<ResultRow> run_ber_experiment(const ExperimentSpec& spec);

struct TrainOutput {
  LstmModel model;
  TrainConfig config;
  std::vector<EpochStats> log;  // entry 0 = before training
  std::size_t dataset_size = 0;
  double class0_fraction = 0.0;  // label balance of the generated set
};
// synthesizes the training set, fits the model, saves spec.checkpoint
// when set, and returns the run record
TrainOutput run_training(const ExperimentSpec& spec);

// epoch log as CSV rows (swept_name "epoch")
std::vector<ResultRow> training_log_rows(const ExperimentSpec& spec, const TrainOutput& out);

// human-readable plan: resolved config (dB and linear), seed schedule,
// work counts; validates the spec first
std::string describe(const ExperimentSpec& spec);

std::string csv_string(const std::vector<ResultRow>& rows);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows);

// flat "key = value" files, '#' comments; unknown keys are errors
std::map<std::string, std::string> parse_config_file(const std::string& path);
void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv);
// "name=v1,v2,..." sweep descriptor (the --sweep flag / sweep config key)
void apply_sweep_descriptor(ExperimentSpec& spec, const std::string& descriptor);

}  // namespace abjam
