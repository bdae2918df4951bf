#pragma once
// Recurrent binary classifier built from scratch: one LSTM layer with
// concatenated gate tensors (row blocks ordered input, forget, cell,
// output), a 2-way dense readout, softmax cross-entropy, backpropagation
// through time and Adam.  A slow readable single-sequence path backs the
// gradient checks; batched GEMM paths carry training and bulk inference.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "abjam/errors.hpp"
#include "abjam/features.hpp"

namespace abjam {

struct TrainConfig {
  std::size_t hidden = 64;       // H; the reference design used 1000, 64 is the desk default
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 6;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

struct LstmModel {
  std::size_t hidden = 0;     // H
  std::size_t input_dim = 0;  // D, 3 for the (real, imag, abs) features
  // concatenated gate parameters, row blocks [input; forget; cell; output]
  std::vector<double> w_in;    // 4H x D
  std::vector<double> w_rec;   // 4H x H
  std::vector<double> bias;    // 4H
  std::vector<double> dense_w; // 2 x H
  std::vector<double> dense_b; // 2
};

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out)) per tensor),
// zero biases; draw order w_in, w_rec, dense_w row-major
LstmModel glorot_init(std::size_t hidden, std::size_t input_dim, Pcg32& rng);

// everything the backward pass needs from one forward run
struct ForwardCache {
  std::size_t steps = 0;
  // per step, each hidden-sized: gate activations and states
  std::vector<double> gate_i, gate_f, gate_g, gate_o;  // steps * H
  std::vector<double> state, state_tanh, out;          // steps * H
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
};

// class probabilities for one sequence; fills `cache` when given
std::array<double, 2> lstm_forward(const LstmModel& model, const FeatureSequence& seq,
                                   ForwardCache* cache = nullptr);

struct Gradients {
  std::vector<double> w_in, w_rec, bias, dense_w, dense_b;
};

// cross-entropy gradient of one sequence via backpropagation through time
Gradients lstm_backward(const LstmModel& model, const FeatureSequence& seq, int label,
                        const ForwardCache& cache);

// batched inference: probabilities for many equal-length sequences
std::vector<std::array<double, 2>> lstm_forward_batch(const LstmModel& model,
                                                      const std::vector<FeatureSequence>& seqs);

// Adam on one flat parameter vector; `t` is the 1-based global step
struct AdamState {
  std::vector<double> m, v;
};
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, std::size_t t, const TrainConfig& cfg);

struct LabeledSequence {
  FeatureSequence features;
  int label = 0;  // backscatter state in {0,1}
};

struct EpochStats {
  double loss = 0.0;      // dataset/epoch mean cross-entropy
  double accuracy = 0.0;  // fraction classified correctly
};

// mini-batch Adam training; log entry 0 is the pre-training evaluation,
// entry k the state after epoch k.  Deterministic for a fixed config.
LstmModel train(const std::vector<LabeledSequence>& dataset, const TrainConfig& cfg,
                std::vector<EpochStats>* log = nullptr);

// dataset mean loss/accuracy of a fixed model (no training side effects)
EpochStats evaluate(const LstmModel& model, const std::vector<LabeledSequence>& dataset);

// JSON checkpoint, loadable across runs; loader validates shapes
void save_checkpoint(const std::string& path, const LstmModel& model, const TrainConfig& cfg);
struct Checkpoint {
  LstmModel model;
  TrainConfig config;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace abjam
