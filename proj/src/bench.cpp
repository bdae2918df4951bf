#include "abjam/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "abjam/capacity.hpp"
#include "abjam/coding.hpp"
#include "abjam/dl_detector.hpp"
#include "abjam/ml_detector.hpp"

namespace abjam {

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::RateVsTheta0: return "rate-vs-theta0";
    case ExperimentKind::RateVsSnr: return "rate-vs-snr";
    case ExperimentKind::BerVsSnr: return "ber-vs-snr";
    case ExperimentKind::BerVsBackscatterSnr: return "ber-vs-backscatter-snr";
    case ExperimentKind::BerVsSpreading: return "ber-vs-spreading";
    case ExperimentKind::TrainDetector: return "train-detector";
    case ExperimentKind::EvalDetector: return "eval-detector";
  }
  return "unknown";
}

const std::vector<std::string>& sweepable_names() {
  static const std::vector<std::string> names = {
      "theta0",          "alpha_tr_db",    "alpha_jr_db", "alpha_t_rel_db",
      "alpha_j_rel_db",  "antennas",       "spreading",   "frame_bits",
      "pilot_bits"};
  return names;
}

namespace {

bool is_rate_kind(ExperimentKind k) {
  return k == ExperimentKind::RateVsTheta0 || k == ExperimentKind::RateVsSnr;
}

bool is_ber_kind(ExperimentKind k) {
  return k == ExperimentKind::BerVsSnr || k == ExperimentKind::BerVsBackscatterSnr ||
         k == ExperimentKind::BerVsSpreading || k == ExperimentKind::EvalDetector;
}

std::string joined_sweepable() {
  std::string s;
  for (const auto& n : sweepable_names()) {
    if (!s.empty()) s += ", ";
    s += n;
  }
  return s;
}

std::size_t to_count(const std::string& name, double v) {
  if (!(v > 0.0) || v != std::floor(v) || v > 1e12)
    throw ConfigError("sweep " + name + ": values must be positive integers, got " +
                      std::to_string(v));
  return static_cast<std::size_t>(v);
}

// mean / standard-error accumulator
struct Stat {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double std_error() const {
    if (n < 2) return 0.0;
    const double nn = static_cast<double>(n);
    const double var = std::max(0.0, (sum_sq - nn * mean() * mean()) / (nn - 1.0));
    return std::sqrt(var / nn);
  }
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// sweep points resolve to (label, value, configured SystemConfig); an
// empty sweep is one point at the base config labelled "none"
struct SweepPoint {
  std::string name;
  double value;
  SystemConfig cfg;
};

std::vector<SweepPoint> resolve_points(const ExperimentSpec& spec) {
  std::vector<SweepPoint> points;
  if (spec.swept_name.empty()) {
    points.push_back({"none", 0.0, spec.base});
    points.back().cfg.validate();
    return points;
  }
  for (double v : spec.swept_values) {
    SweepPoint p{spec.swept_name, v, spec.base};
    apply_swept_value(p.cfg, spec.swept_name, v);
    p.cfg.validate();
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<int> draw_data_bits(std::size_t count, double theta0, Pcg32& rng) {
  std::vector<int> bits(count);
  for (auto& b : bits) b = rng.uniform() < theta0 ? 0 : 1;
  return bits;
}

}  // namespace

void apply_swept_value(SystemConfig& cfg, const std::string& name, double value) {
  if (name == "theta0") {
    cfg.theta0 = value;
  } else if (name == "alpha_tr_db") {
    cfg.alpha_tr = db_to_linear(value);
  } else if (name == "alpha_jr_db") {
    cfg.alpha_jr = db_to_linear(value);
  } else if (name == "alpha_t_rel_db") {
    cfg.alpha_t_rel = db_to_linear(value);
  } else if (name == "alpha_j_rel_db") {
    cfg.alpha_j_rel = db_to_linear(value);
  } else if (name == "antennas") {
    cfg.antennas = to_count(name, value);
  } else if (name == "spreading") {
    cfg.spreading = to_count(name, value);
  } else if (name == "frame_bits") {
    cfg.frame_bits = to_count(name, value);
  } else if (name == "pilot_bits") {
    cfg.pilot_bits = to_count(name, value);
  } else {
    throw ConfigError("unknown sweep parameter '" + name + "'; valid: " + joined_sweepable());
  }
}

void ExperimentSpec::validate() const {
  base.validate();
  if (!swept_name.empty()) {
    if (std::find(sweepable_names().begin(), sweepable_names().end(), swept_name) ==
        sweepable_names().end())
      throw ConfigError("unknown sweep parameter '" + swept_name +
                        "'; valid: " + joined_sweepable());
    if (swept_values.empty()) throw ConfigError("sweep '" + swept_name + "' has no values");
  }
  if (kind == ExperimentKind::RateVsTheta0 && swept_name != "theta0")
    throw ConfigError("rate-vs-theta0 needs a theta0 sweep");
  if (is_rate_kind(kind)) {
    if (trials < 2) throw ConfigError("rate experiments need at least 2 MC samples");
    if (realizations < 1) throw ConfigError("need at least 1 channel realization");
    if (!(grid_step > 0.0 && grid_step < 1.0))
      throw ConfigError("prior grid step must be in (0,1)");
  }
  if (is_ber_kind(kind)) {
    if (trials < 1) throw ConfigError("BER experiments need at least 1 frame");
    if (detector != "ml" && detector != "dl")
      throw ConfigError("detector must be 'ml' or 'dl', got '" + detector + "'");
    if (detector == "dl" && checkpoint.empty())
      throw ConfigError("the learned detector needs a checkpoint path");
    if (kind == ExperimentKind::EvalDetector && detector != "dl")
      throw ConfigError("eval-detector runs the learned detector; set detector=dl");
  }
  if (kind == ExperimentKind::TrainDetector) {
    if (train_frames < 1) throw ConfigError("training needs at least 1 frame");
    if (base.pilot_bits < 2)
      throw ConfigError("training needs at least 2 pilot bits for the state covariances");
    const std::size_t data = base.frame_bits - base.pilot_bits;
    if (symbols_per_frame < 1 || symbols_per_frame > data)
      throw ConfigError("symbols_per_frame must be in [1, " + std::to_string(data) + "]");
  }
}

std::vector<ResultRow> run_rate_experiment(const ExperimentSpec& spec) {
  if (!is_rate_kind(spec.kind))
    throw ConfigError(std::string("run_rate_experiment: spec kind is ") + kind_name(spec.kind));
  spec.validate();

  std::vector<ResultRow> rows;
  if (spec.kind == ExperimentKind::RateVsTheta0) {
    // one shared set of channel draws and MC samples across the whole
    // prior grid; differences between grid points are then signal, not
    // sampling noise
    Timer timer;
    spec.base.validate();
    std::vector<Stat> stats(spec.swept_values.size());
    for (std::size_t r = 0; r < spec.realizations; ++r) {
      Pcg32 rng(spec.base.seed, substream(StreamPurpose::kRealization, 0, r));
      const ChannelRealization ch = draw_channel(spec.base, rng);
      const CovariancePair pair = covariance_matrices(spec.base, ch);
      const std::vector<MiEstimate> curve =
          mutual_information_curve(spec.swept_values, pair, spec.trials, rng);
      for (std::size_t i = 0; i < curve.size(); ++i) stats[i].add(curve[i].value);
    }
    const double wall = timer.seconds();
    for (std::size_t i = 0; i < spec.swept_values.size(); ++i)
      rows.push_back({spec.swept_name, spec.swept_values[i], "mi_bits", stats[i].mean(),
                      stats[i].std_error(), spec.realizations, spec.base.seed, wall});
    return rows;
  }

  const std::vector<SweepPoint> points = resolve_points(spec);
  for (std::size_t p = 0; p < points.size(); ++p) {
    Timer timer;
    Stat rate, argmax;
    for (std::size_t r = 0; r < spec.realizations; ++r) {
      Pcg32 rng(points[p].cfg.seed, substream(StreamPurpose::kRealization, p, r));
      const ChannelRealization ch = draw_channel(points[p].cfg, rng);
      const CovariancePair pair = covariance_matrices(points[p].cfg, ch);
      const RateEstimate est =
          max_backscatter_rate(pair, spec.trials, spec.grid_step, rng);
      rate.add(est.rate_bits);
      argmax.add(est.theta0_star);
    }
    const double wall = timer.seconds();
    rows.push_back({points[p].name, points[p].value, "rate_bits", rate.mean(),
                    rate.std_error(), spec.realizations, points[p].cfg.seed, wall});
    rows.push_back({points[p].name, points[p].value, "theta0_star", argmax.mean(),
                    argmax.std_error(), spec.realizations, points[p].cfg.seed, wall});
  }
  return rows;
}

std::vector<ResultRow> run_ber_experiment(const ExperimentSpec& spec) {
  if (!is_ber_kind(spec.kind))
    throw ConfigError(std::string("run_ber_experiment: spec kind is ") + kind_name(spec.kind));
  spec.validate();

  LstmModel model;
  if (spec.detector == "dl") model = load_checkpoint(spec.checkpoint).model;

  std::vector<ResultRow> rows;
  const std::vector<SweepPoint> points = resolve_points(spec);
  for (std::size_t p = 0; p < points.size(); ++p) {
    Timer timer;
    const SystemConfig& cfg = points[p].cfg;
    const std::size_t data_len = cfg.frame_bits - cfg.pilot_bits;
    Stat frame_ber;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      Pcg32 rng(cfg.seed, substream(StreamPurpose::kEvalFrame, p, t));
      const ChannelRealization ch = draw_channel(cfg, rng);
      const BackscatterFrame frame =
          make_frame(draw_data_bits(data_len, cfg.theta0, rng), cfg.pilot_bits);
      const ReceivedBlock block = synthesize_frame(cfg, ch, frame.encoded, rng);

      std::size_t errors = 0;
      if (spec.detector == "ml") {
        const CovariancePair pair = covariance_matrices(cfg, ch);
        const std::vector<int> decoded = detect_frame(block, pair);
        for (std::size_t i = cfg.pilot_bits; i < cfg.frame_bits; ++i)
          errors += decoded[i] != frame.bits[i];
      } else {
        const std::vector<int> decoded = predict_frame(model, block, frame);
        for (std::size_t i = 0; i < data_len; ++i)
          errors += decoded[i] != frame.bits[cfg.pilot_bits + i];
      }
      frame_ber.add(static_cast<double>(errors) / static_cast<double>(data_len));
    }
    const double wall = timer.seconds();
    const double ber = frame_ber.mean();
    const double se = frame_ber.std_error();
    rows.push_back({points[p].name, points[p].value, "ber", ber, se, spec.trials,
                    cfg.seed, wall});
    // net data throughput per RF sample: data fraction of the frame times
    // the complement of the error rate, spread over N samples per symbol
    const double factor = static_cast<double>(data_len) /
                          (static_cast<double>(cfg.frame_bits) *
                           static_cast<double>(cfg.spreading));
    rows.push_back({points[p].name, points[p].value, "bits_per_rf_symbol",
                    (1.0 - ber) * factor, se * factor, spec.trials, cfg.seed, wall});
  }
  return rows;
}

TrainOutput run_training(const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::TrainDetector)
    throw ConfigError(std::string("run_training: spec kind is ") + kind_name(spec.kind));
  spec.validate();
  const SystemConfig& cfg = spec.base;
  const std::size_t data_len = cfg.frame_bits - cfg.pilot_bits;

  // last pilot state, the point the data-region state chain hangs off
  int pilot_exit = kDiffReference;
  {
    const BackscatterFrame skeleton = make_frame(std::vector<int>(data_len, 0), cfg.pilot_bits);
    pilot_exit = skeleton.encoded[cfg.pilot_bits - 1];
  }

  std::vector<LabeledSequence> dataset;
  dataset.reserve(spec.train_frames * spec.symbols_per_frame);
  std::size_t zeros = 0;
  for (std::size_t f = 0; f < spec.train_frames; ++f) {
    Pcg32 rng(cfg.seed, substream(StreamPurpose::kTrainFrame, 0, f));
    const ChannelRealization ch = draw_channel(cfg, rng);

    // draw the data-region STATES i.i.d. with P(state 0) = theta0 and
    // derive the bits, so the label classes match the prior exactly
    std::vector<int> data(data_len);
    int prev = pilot_exit;
    for (std::size_t i = 0; i < data_len; ++i) {
      const int e = rng.uniform() < cfg.theta0 ? 0 : 1;
      data[i] = e ^ prev;
      prev = e;
    }
    const BackscatterFrame frame = make_frame(data, cfg.pilot_bits);
    const ReceivedBlock block = synthesize_frame(cfg, ch, frame.encoded, rng);

    const PilotCovariances pilots = pilot_covariances(block, frame);
    const CMatrix inv0 = inverse(pilots.k0);
    const CMatrix inv1 = inverse(pilots.k1);
    for (std::size_t j = 0; j < spec.symbols_per_frame; ++j) {
      const std::size_t idx = cfg.pilot_bits + j * data_len / spec.symbols_per_frame;
      const CMatrix c = sample_covariance(block.symbol(idx));
      const auto whitened = whiten_inv(c, inv0, inv1);
      LabeledSequence ex;
      ex.features = featurize(whitened.first, whitened.second);
      ex.label = frame.encoded[idx];
      zeros += ex.label == 0;
      dataset.push_back(std::move(ex));
    }
  }

  TrainOutput out;
  out.config = spec.train;
  out.dataset_size = dataset.size();
  out.class0_fraction = static_cast<double>(zeros) / static_cast<double>(dataset.size());
  out.model = train(dataset, spec.train, &out.log);
  if (!spec.checkpoint.empty()) save_checkpoint(spec.checkpoint, out.model, spec.train);
  return out;
}

std::vector<ResultRow> training_log_rows(const ExperimentSpec& spec, const TrainOutput& out) {
  std::vector<ResultRow> rows;
  for (std::size_t k = 0; k < out.log.size(); ++k) {
    rows.push_back({"epoch", static_cast<double>(k), "train_loss", out.log[k].loss, 0.0,
                    out.dataset_size, spec.base.seed, 0.0});
    rows.push_back({"epoch", static_cast<double>(k), "train_accuracy", out.log[k].accuracy,
                    0.0, out.dataset_size, spec.base.seed, 0.0});
  }
  return rows;
}

namespace {

std::string fmt_double(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_gain(double linear) {
  if (linear <= 0.0) return "0 (silent)";
  return fmt_double(linear, "%.4f") + " (" + fmt_double(linear_to_db(linear), "%.6g") + " dB)";
}

}  // namespace

std::string describe(const ExperimentSpec& spec) {
  spec.validate();
  std::ostringstream os;
  os << "experiment: " << kind_name(spec.kind);
  if (is_ber_kind(spec.kind)) os << " (detector " << spec.detector << ")";
  os << "\n";

  if (spec.swept_name.empty()) {
    os << "sweep: none (single point)\n";
  } else {
    os << "sweep: " << spec.swept_name << " =";
    for (double v : spec.swept_values) os << " " << fmt_double(v, "%g");
    os << " (" << spec.swept_values.size() << " points)\n";
  }

  const SystemConfig& c = spec.base;
  os << "config: antennas=" << c.antennas << " spreading=" << c.spreading
     << " frame_bits=" << c.frame_bits << " pilot_bits=" << c.pilot_bits << "\n";
  os << "  alpha_tr = " << fmt_gain(c.alpha_tr) << "  alpha_jr = " << fmt_gain(c.alpha_jr)
     << "\n";
  os << "  alpha_t_rel = " << fmt_gain(c.alpha_t_rel)
     << "  alpha_j_rel = " << fmt_gain(c.alpha_j_rel) << "\n";
  os << "  theta0 = " << fmt_double(c.theta0, "%g") << "\n";
  os << "seed: " << c.seed
     << "  (substream = purpose<<56 | point<<40 | trial; purposes: eval-frame=0,"
        " realization=1, train-frame=2, misc=3)\n";

  const std::size_t points = spec.swept_name.empty() ? 1 : spec.swept_values.size();
  if (is_rate_kind(spec.kind)) {
    os << "work: " << points << " point(s) x " << spec.realizations << " realizations x "
       << spec.trials << " MC samples";
    if (spec.kind == ExperimentKind::RateVsSnr)
      os << " (prior grid step " << fmt_double(spec.grid_step, "%g") << ")";
    os << "\n";
  } else if (is_ber_kind(spec.kind)) {
    os << "work: " << points << " point(s) x " << spec.trials << " frames x "
       << (c.frame_bits - c.pilot_bits) << " data bits\n";
    if (spec.detector == "dl") os << "checkpoint: " << spec.checkpoint << "\n";
  } else {
    os << "work: " << spec.train_frames << " frames x " << spec.symbols_per_frame
       << " symbols -> " << spec.train_frames * spec.symbols_per_frame << " sequences\n";
    os << "train: hidden=" << spec.train.hidden << " epochs=" << spec.train.epochs
       << " batch_size=" << spec.train.batch_size << " learning_rate="
       << fmt_double(spec.train.learning_rate, "%g") << "\n";
    if (!spec.checkpoint.empty()) os << "checkpoint: " << spec.checkpoint << "\n";
  }
  return os.str();
}

std::string csv_string(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "swept_name,swept_value,metric,value,stderr,trials,seed,wall_seconds\n";
  for (const ResultRow& r : rows) {
    os << r.swept_name << "," << fmt_double(r.swept_value) << "," << r.metric << ","
       << fmt_double(r.value) << "," << fmt_double(r.std_error) << "," << r.trials << ","
       << r.seed << "," << fmt_double(r.wall_seconds, "%.3f") << "\n";
  }
  return os.str();
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_csv: cannot open " + path);
  out << csv_string(rows);
  if (!out) throw ConfigError("write_csv: write failed for " + path);
}

// ---- config files -----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer '" + v + "'");
  }
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not readable: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
    kv[key] = value;  // last occurrence wins
  }
  return kv;
}

void apply_sweep_descriptor(ExperimentSpec& spec, const std::string& descriptor) {
  const auto eq = descriptor.find('=');
  if (eq == std::string::npos)
    throw ConfigError("sweep descriptor must be name=v1,v2,..., got '" + descriptor + "'");
  const std::string name = trim(descriptor.substr(0, eq));
  if (std::find(sweepable_names().begin(), sweepable_names().end(), name) ==
      sweepable_names().end())
    throw ConfigError("unknown sweep parameter '" + name + "'; valid: " + joined_sweepable());
  std::vector<double> values;
  std::stringstream list(descriptor.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    values.push_back(to_double("sweep", item));
  }
  if (values.empty()) throw ConfigError("sweep '" + name + "' has no values");
  spec.swept_name = name;
  spec.swept_values = std::move(values);
}

void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "antennas") spec.base.antennas = to_u64(key, value);
    else if (key == "spreading") spec.base.spreading = to_u64(key, value);
    else if (key == "frame_bits") spec.base.frame_bits = to_u64(key, value);
    else if (key == "pilot_bits") spec.base.pilot_bits = to_u64(key, value);
    else if (key == "alpha_tr_db") spec.base.alpha_tr = db_to_linear(to_double(key, value));
    else if (key == "alpha_jr_db") spec.base.alpha_jr = db_to_linear(to_double(key, value));
    else if (key == "alpha_t_rel_db")
      spec.base.alpha_t_rel = db_to_linear(to_double(key, value));
    else if (key == "alpha_j_rel_db")
      spec.base.alpha_j_rel = db_to_linear(to_double(key, value));
    else if (key == "theta0") spec.base.theta0 = to_double(key, value);
    else if (key == "seed") {
      spec.base.seed = to_u64(key, value);
      spec.train.seed = spec.base.seed;  // one master seed
    } else if (key == "trials") spec.trials = to_u64(key, value);
    else if (key == "realizations") spec.realizations = to_u64(key, value);
    else if (key == "grid_step") spec.grid_step = to_double(key, value);
    else if (key == "detector") spec.detector = value;
    else if (key == "checkpoint") spec.checkpoint = value;
    else if (key == "sweep") apply_sweep_descriptor(spec, value);
    else if (key == "hidden") spec.train.hidden = to_u64(key, value);
    else if (key == "epochs") spec.train.epochs = to_u64(key, value);
    else if (key == "batch_size") spec.train.batch_size = to_u64(key, value);
    else if (key == "learning_rate") spec.train.learning_rate = to_double(key, value);
    else if (key == "train_frames") spec.train_frames = to_u64(key, value);
    else if (key == "symbols_per_frame") spec.symbols_per_frame = to_u64(key, value);
    else
      throw ConfigError(
          "unknown config key '" + key +
          "'; valid: antennas, spreading, frame_bits, pilot_bits, alpha_tr_db, "
          "alpha_jr_db, alpha_t_rel_db, alpha_j_rel_db, theta0, seed, trials, "
          "realizations, grid_step, detector, checkpoint, sweep, hidden, epochs, "
          "batch_size, learning_rate, train_frames, symbols_per_frame");
  }
}

}  // namespace abjam
