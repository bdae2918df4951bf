#include "abjam/lstm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace abjam {

namespace {

constexpr double kProbFloor = 1e-300;  // keeps log() finite

// The gate loops evaluate hundreds of sigmoids/tanhs per recurrence step
// and dominate bulk inference, so the activations use a branch-free
// range-reduced polynomial exp the compiler can vectorize instead of libm
// calls.  Inputs are clamped where the true function is saturated at
// double precision anyway; relative error stays within a few ulp.  Both
// the single-sequence and the batched path share these, which keeps the
// two numerically identical.

inline double poly_exp(double x) {
  // x = k ln2 + r with |r| <= ln2/2; e^x = 2^k e^r, e^r by a degree-13
  // Taylor/Horner whose tail is below 1e-17 on that interval.  Caller
  // guarantees |x| <= ~90, so k never leaves the normal exponent range.
  constexpr double kInvLn2 = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const double kd = std::nearbyint(x * kInvLn2);
  const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;
  double p = 1.0 / 6227020800.0;  // 1/13!
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 1.0 / 2.0;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const auto k = static_cast<std::int64_t>(kd);
  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(k + 1023) << 52);
  return p * scale;
}

inline double sigmoid(double x) {
  // saturated beyond +-45 at double precision; e^xc never overflows, so
  // the single expression holds across the whole clamped range
  const double xc = std::min(std::max(x, -45.0), 45.0);
  const double e = poly_exp(xc);
  return e / (1.0 + e);
}

inline double tanh_gate(double x) {
  // tanh saturates within one ulp beyond |x| ~ 19; clamping first keeps
  // the exponent range tame and the expression branch-free
  const double xc = std::min(std::max(x, -22.0), 22.0);
  const double u = poly_exp(2.0 * xc);
  return (u - 1.0) / (u + 1.0);
}

std::array<double, 2> softmax2(double l0, double l1) {
  const double m = std::max(l0, l1);
  const double e0 = std::exp(l0 - m);
  const double e1 = std::exp(l1 - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

// ---- small dense kernels -------------------------------------------------
// Row-major double GEMMs sized for this model (a few hundred rows, batch
// columns in the tens).  Register-tiled 4x16 blocks so the FMA units stay
// busy; every remainder path keeps the same per-element accumulation order
// as the plain triple loop, which keeps batched and single-sequence paths
// numerically aligned.

constexpr std::size_t kRowTile = 4;
constexpr std::size_t kColTile = 16;

// c (m x n) = [c +] a (m x k) * b (k x n)
void gemm_nn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate) {
  std::size_t j0 = 0;
  for (; j0 + kColTile <= n; j0 += kColTile) {
    std::size_t i0 = 0;
    for (; i0 + kRowTile <= m; i0 += kRowTile) {
      double acc[kRowTile][kColTile];
      for (std::size_t r = 0; r < kRowTile; ++r)
        for (std::size_t v = 0; v < kColTile; ++v)
          acc[r][v] = accumulate ? c[(i0 + r) * n + j0 + v] : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j0;
        for (std::size_t r = 0; r < kRowTile; ++r) {
          const double ar = a[(i0 + r) * k + p];
          for (std::size_t v = 0; v < kColTile; ++v) acc[r][v] += ar * brow[v];
        }
      }
      for (std::size_t r = 0; r < kRowTile; ++r)
        for (std::size_t v = 0; v < kColTile; ++v) c[(i0 + r) * n + j0 + v] = acc[r][v];
    }
    for (; i0 < m; ++i0) {  // leftover rows
      double acc[kColTile];
      for (std::size_t v = 0; v < kColTile; ++v)
        acc[v] = accumulate ? c[i0 * n + j0 + v] : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double ar = a[i0 * k + p];
        const double* brow = b + p * n + j0;
        for (std::size_t v = 0; v < kColTile; ++v) acc[v] += ar * brow[v];
      }
      for (std::size_t v = 0; v < kColTile; ++v) c[i0 * n + j0 + v] = acc[v];
    }
  }
  for (std::size_t i = 0; i < m && j0 < n; ++i) {  // leftover columns
    for (std::size_t j = j0; j < n; ++j) {
      double s = accumulate ? c[i * n + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

// c (m x n) += a^T * b with a stored (k x m), b stored (k x n)
void gemm_tn_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
  std::size_t j0 = 0;
  for (; j0 + kColTile <= n; j0 += kColTile) {
    std::size_t i0 = 0;
    for (; i0 + kRowTile <= m; i0 += kRowTile) {
      double acc[kRowTile][kColTile];
      for (std::size_t r = 0; r < kRowTile; ++r)
        for (std::size_t v = 0; v < kColTile; ++v) acc[r][v] = c[(i0 + r) * n + j0 + v];
      for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m + i0;
        const double* brow = b + p * n + j0;
        for (std::size_t r = 0; r < kRowTile; ++r)
          for (std::size_t v = 0; v < kColTile; ++v) acc[r][v] += arow[r] * brow[v];
      }
      for (std::size_t r = 0; r < kRowTile; ++r)
        for (std::size_t v = 0; v < kColTile; ++v) c[(i0 + r) * n + j0 + v] = acc[r][v];
    }
    for (; i0 < m; ++i0) {
      double acc[kColTile];
      for (std::size_t v = 0; v < kColTile; ++v) acc[v] = c[i0 * n + j0 + v];
      for (std::size_t p = 0; p < k; ++p) {
        const double ar = a[p * m + i0];
        const double* brow = b + p * n + j0;
        for (std::size_t v = 0; v < kColTile; ++v) acc[v] += ar * brow[v];
      }
      for (std::size_t v = 0; v < kColTile; ++v) c[i0 * n + j0 + v] = acc[v];
    }
  }
  for (std::size_t i = 0; i < m && j0 < n; ++i) {
    for (std::size_t j = j0; j < n; ++j) {
      double s = c[i * n + j];
      for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

// c (m x n) += a (m x k) * b^T with b stored (n x k): batched outer-product
// accumulation for the weight gradients; contiguous dot products over k
void gemm_nt_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
  constexpr std::size_t kLanes = 8;
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double part[kLanes] = {0, 0, 0, 0, 0, 0, 0, 0};
      std::size_t p = 0;
      for (; p + kLanes <= k; p += kLanes)
        for (std::size_t v = 0; v < kLanes; ++v) part[v] += arow[p + v] * brow[p + v];
      double s = 0.0;
      for (std::size_t v = 0; v < kLanes; ++v) s += part[v];
      for (; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

void require_model_shapes(const LstmModel& model) {
  const std::size_t h = model.hidden, d = model.input_dim;
  if (h == 0 || d == 0) throw DimensionError("lstm: model has zero-sized layers");
  if (model.w_in.size() != 4 * h * d || model.w_rec.size() != 4 * h * h ||
      model.bias.size() != 4 * h || model.dense_w.size() != 2 * h ||
      model.dense_b.size() != 2)
    throw DimensionError("lstm: model tensor sizes do not match hidden/input dims");
}

void require_sequence(const LstmModel& model, const FeatureSequence& seq) {
  if (seq.steps == 0) throw DimensionError("lstm: empty sequence");
  if (seq.values.size() != seq.steps * model.input_dim)
    throw DimensionError("lstm: sequence width does not match the model input dim");
}

}  // namespace

LstmModel glorot_init(std::size_t hidden, std::size_t input_dim, Pcg32& rng) {
  if (hidden == 0 || input_dim == 0)
    throw DimensionError("glorot_init: dims must be positive");
  LstmModel m;
  m.hidden = hidden;
  m.input_dim = input_dim;
  auto fill = [&rng](std::vector<double>& w, std::size_t count, double fan_in,
                     double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    w.resize(count);
    for (auto& v : w) v = (2.0 * rng.uniform() - 1.0) * limit;
  };
  const double h = static_cast<double>(hidden);
  const double d = static_cast<double>(input_dim);
  fill(m.w_in, 4 * hidden * input_dim, d, 4.0 * h);
  fill(m.w_rec, 4 * hidden * hidden, h, 4.0 * h);
  m.bias.assign(4 * hidden, 0.0);
  fill(m.dense_w, 2 * hidden, h, 2.0);
  m.dense_b.assign(2, 0.0);
  return m;
}

std::array<double, 2> lstm_forward(const LstmModel& model, const FeatureSequence& seq,
                                   ForwardCache* cache) {
  require_model_shapes(model);
  require_sequence(model, seq);
  const std::size_t h = model.hidden, d = model.input_dim, steps = seq.steps;

  if (cache) {
    cache->steps = steps;
    for (auto* v : {&cache->gate_i, &cache->gate_f, &cache->gate_g, &cache->gate_o,
                    &cache->state, &cache->state_tanh, &cache->out})
      v->assign(steps * h, 0.0);
  }

  std::vector<double> w_prev(h, 0.0), s_prev(h, 0.0), w_cur(h), s_cur(h);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = seq.values.data() + t * d;
    for (std::size_t r = 0; r < h; ++r) {
      // the four gate rows for hidden unit r, blocks ordered i, f, g, o
      double pre[4];
      for (std::size_t gate = 0; gate < 4; ++gate) {
        const std::size_t row = gate * h + r;
        double acc = model.bias[row];
        for (std::size_t c = 0; c < d; ++c) acc += model.w_in[row * d + c] * x[c];
        for (std::size_t c = 0; c < h; ++c) acc += model.w_rec[row * h + c] * w_prev[c];
        pre[gate] = acc;
      }
      const double gi = sigmoid(pre[0]);
      const double gf = sigmoid(pre[1]);
      const double gg = tanh_gate(pre[2]);
      const double go = sigmoid(pre[3]);
      const double s = gf * s_prev[r] + gi * gg;
      const double ts = tanh_gate(s);
      s_cur[r] = s;
      w_cur[r] = go * ts;
      if (cache) {
        cache->gate_i[t * h + r] = gi;
        cache->gate_f[t * h + r] = gf;
        cache->gate_g[t * h + r] = gg;
        cache->gate_o[t * h + r] = go;
        cache->state[t * h + r] = s;
        cache->state_tanh[t * h + r] = ts;
        cache->out[t * h + r] = w_cur[r];
      }
    }
    std::swap(w_prev, w_cur);
    std::swap(s_prev, s_cur);
  }

  std::array<double, 2> logits{model.dense_b[0], model.dense_b[1]};
  for (std::size_t c = 0; c < h; ++c) {
    logits[0] += model.dense_w[c] * w_prev[c];
    logits[1] += model.dense_w[h + c] * w_prev[c];
  }
  if (!std::isfinite(logits[0]) || !std::isfinite(logits[1]))
    throw NumericFaultError("lstm_forward: non-finite logits");
  const std::array<double, 2> probs = softmax2(logits[0], logits[1]);
  if (cache) {
    cache->logits = logits;
    cache->probs = probs;
  }
  return probs;
}

Gradients lstm_backward(const LstmModel& model, const FeatureSequence& seq, int label,
                        const ForwardCache& cache) {
  require_model_shapes(model);
  require_sequence(model, seq);
  if (label != 0 && label != 1) throw DimensionError("lstm_backward: label must be 0 or 1");
  if (cache.steps != seq.steps || cache.out.size() != seq.steps * model.hidden)
    throw DimensionError("lstm_backward: cache does not match the sequence");
  const std::size_t h = model.hidden, d = model.input_dim, steps = seq.steps;

  Gradients g;
  g.w_in.assign(model.w_in.size(), 0.0);
  g.w_rec.assign(model.w_rec.size(), 0.0);
  g.bias.assign(model.bias.size(), 0.0);
  g.dense_w.assign(model.dense_w.size(), 0.0);
  g.dense_b.assign(model.dense_b.size(), 0.0);

  // softmax cross-entropy head: dlogit = p - onehot(label)
  const double dlogit[2] = {cache.probs[0] - (label == 0 ? 1.0 : 0.0),
                            cache.probs[1] - (label == 1 ? 1.0 : 0.0)};
  const double* w_last = cache.out.data() + (steps - 1) * h;
  for (std::size_t k = 0; k < 2; ++k) {
    g.dense_b[k] = dlogit[k];
    for (std::size_t c = 0; c < h; ++c) g.dense_w[k * h + c] = dlogit[k] * w_last[c];
  }

  std::vector<double> dw(h), ds(h, 0.0), da(4 * h);
  for (std::size_t c = 0; c < h; ++c)
    dw[c] = model.dense_w[c] * dlogit[0] + model.dense_w[h + c] * dlogit[1];

  for (std::size_t t = steps; t-- > 0;) {
    const double* gi = cache.gate_i.data() + t * h;
    const double* gf = cache.gate_f.data() + t * h;
    const double* gg = cache.gate_g.data() + t * h;
    const double* go = cache.gate_o.data() + t * h;
    const double* ts = cache.state_tanh.data() + t * h;
    const double* s_prev = t > 0 ? cache.state.data() + (t - 1) * h : nullptr;
    const double* w_prev = t > 0 ? cache.out.data() + (t - 1) * h : nullptr;
    const double* x = seq.values.data() + t * d;

    for (std::size_t r = 0; r < h; ++r) {
      const double d_out = dw[r];
      const double ds_t = ds[r] + d_out * go[r] * (1.0 - ts[r] * ts[r]);
      const double di = ds_t * gg[r];
      const double df = ds_t * (t > 0 ? s_prev[r] : 0.0);
      const double dg = ds_t * gi[r];
      const double d_o = d_out * ts[r];
      da[0 * h + r] = di * gi[r] * (1.0 - gi[r]);
      da[1 * h + r] = df * gf[r] * (1.0 - gf[r]);
      da[2 * h + r] = dg * (1.0 - gg[r] * gg[r]);
      da[3 * h + r] = d_o * go[r] * (1.0 - go[r]);
      ds[r] = ds_t * gf[r];  // flows to step t-1
    }

    for (std::size_t row = 0; row < 4 * h; ++row) {
      const double a = da[row];
      g.bias[row] += a;
      for (std::size_t c = 0; c < d; ++c) g.w_in[row * d + c] += a * x[c];
      if (t > 0)
        for (std::size_t c = 0; c < h; ++c) g.w_rec[row * h + c] += a * w_prev[c];
    }

    // dw for step t-1 through the recurrent weights
    if (t > 0) {
      std::fill(dw.begin(), dw.end(), 0.0);
      for (std::size_t row = 0; row < 4 * h; ++row) {
        const double a = da[row];
        for (std::size_t c = 0; c < h; ++c) dw[c] += model.w_rec[row * h + c] * a;
      }
    }
  }
  return g;
}

// ---- batched paths --------------------------------------------------------

namespace {

constexpr std::size_t kBatchPad = kColTile;  // pad batch columns to tile width

std::size_t padded(std::size_t b) { return (b + kBatchPad - 1) / kBatchPad * kBatchPad; }

// column-major-in-batch workspace shared by training and bulk inference
struct BatchWork {
  std::size_t steps = 0, h = 0, d = 0, cols = 0;
  bool keep_history = false;
  std::vector<double> x;                      // steps * d * cols
  std::vector<double> gates;                  // (history? steps : 1) * 4h * cols
  std::vector<double> state, state_tanh, out; // (history? steps : 2) * h * cols
  std::vector<double> logits, probs;          // 2 * cols

  void reset(std::size_t steps_, std::size_t h_, std::size_t d_, std::size_t cols_,
             bool keep_history_) {
    steps = steps_;
    h = h_;
    d = d_;
    cols = cols_;
    keep_history = keep_history_;
    const std::size_t frames = keep_history ? steps : 1;
    const std::size_t sframes = keep_history ? steps : 2;
    x.assign(steps * d * cols, 0.0);
    gates.assign(frames * 4 * h * cols, 0.0);
    state.assign(sframes * h * cols, 0.0);
    state_tanh.assign(sframes * h * cols, 0.0);
    out.assign(sframes * h * cols, 0.0);
    logits.assign(2 * cols, 0.0);
    probs.assign(2 * cols, 0.0);
  }
};

// transpose a batch of sequences into the workspace: x_t is d x cols
void load_batch(BatchWork& w, const std::vector<FeatureSequence>& seqs,
                const std::size_t* idx, std::size_t count) {
  for (std::size_t b = 0; b < count; ++b) {
    const FeatureSequence& seq = seqs[idx ? idx[b] : b];
    for (std::size_t t = 0; t < w.steps; ++t)
      for (std::size_t c = 0; c < w.d; ++c)
        w.x[(t * w.d + c) * w.cols + b] = seq.values[t * w.d + c];
  }
}

// run the recurrence over the whole batch; with keep_history every step's
// activations stay addressable for backprop, otherwise two slots ping-pong
void forward_batch(const LstmModel& model, BatchWork& w) {
  const std::size_t h = model.hidden, d = model.input_dim, cols = w.cols;
  const std::size_t hc = h * cols;
  for (std::size_t t = 0; t < w.steps; ++t) {
    double* ga = w.gates.data() + (w.keep_history ? t * 4 * hc : 0);
    for (std::size_t row = 0; row < 4 * h; ++row)
      std::fill(ga + row * cols, ga + (row + 1) * cols, model.bias[row]);
    gemm_nn(ga, model.w_in.data(), w.x.data() + t * d * cols, 4 * h, d, cols, true);

    const std::size_t cur = w.keep_history ? t : (t & 1);
    const std::size_t prev = w.keep_history ? t - 1 : (cur ^ 1);
    if (t > 0)
      gemm_nn(ga, model.w_rec.data(), w.out.data() + prev * hc, 4 * h, h, cols, true);

    double* s_cur = w.state.data() + cur * hc;
    double* ts_cur = w.state_tanh.data() + cur * hc;
    double* o_cur = w.out.data() + cur * hc;
    const double* s_prev = t > 0 ? w.state.data() + prev * hc : nullptr;
    for (std::size_t r = 0; r < h; ++r) {
      double* gi = ga + (0 * h + r) * cols;
      double* gf = ga + (1 * h + r) * cols;
      double* gg = ga + (2 * h + r) * cols;
      double* go = ga + (3 * h + r) * cols;
      for (std::size_t b = 0; b < cols; ++b) {
        const double vi = sigmoid(gi[b]);
        const double vf = sigmoid(gf[b]);
        const double vg = tanh_gate(gg[b]);
        const double vo = sigmoid(go[b]);
        gi[b] = vi;
        gf[b] = vf;
        gg[b] = vg;
        go[b] = vo;
        const double s = vf * (t > 0 ? s_prev[r * cols + b] : 0.0) + vi * vg;
        const double ts = tanh_gate(s);
        s_cur[r * cols + b] = s;
        ts_cur[r * cols + b] = ts;
        o_cur[r * cols + b] = vo * ts;
      }
    }
  }

  const std::size_t last = w.keep_history ? w.steps - 1 : ((w.steps - 1) & 1);
  for (std::size_t k = 0; k < 2; ++k)
    std::fill(w.logits.begin() + k * cols, w.logits.begin() + (k + 1) * cols,
              model.dense_b[k]);
  gemm_nn(w.logits.data(), model.dense_w.data(), w.out.data() + last * hc, 2, h, cols, true);
  for (std::size_t b = 0; b < cols; ++b) {
    if (!std::isfinite(w.logits[b]) || !std::isfinite(w.logits[cols + b]))
      throw NumericFaultError("lstm: non-finite logits in batched forward");
    const std::array<double, 2> p = softmax2(w.logits[b], w.logits[cols + b]);
    w.probs[b] = p[0];
    w.probs[cols + b] = p[1];
  }
}

// cross-entropy BPTT over a forwarded batch; gradients are sums over the
// real columns (padding columns carry zero dlogits and stay zero)
void backward_batch(const LstmModel& model, BatchWork& w, const int* labels,
                    std::size_t count, Gradients& g) {
  const std::size_t h = model.hidden, d = model.input_dim, cols = w.cols;
  const std::size_t hc = h * cols;
  std::vector<double> dlogits(2 * cols, 0.0);
  for (std::size_t b = 0; b < count; ++b) {
    dlogits[b] = w.probs[b] - (labels[b] == 0 ? 1.0 : 0.0);
    dlogits[cols + b] = w.probs[cols + b] - (labels[b] == 1 ? 1.0 : 0.0);
  }

  const double* w_last = w.out.data() + (w.steps - 1) * hc;
  gemm_nt_acc(g.dense_w.data(), dlogits.data(), w_last, 2, cols, h);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t b = 0; b < count; ++b) g.dense_b[k] += dlogits[k * cols + b];

  std::vector<double> dw(hc, 0.0), ds(hc, 0.0), da(4 * hc, 0.0);
  gemm_tn_acc(dw.data(), model.dense_w.data(), dlogits.data(), h, 2, cols);

  for (std::size_t t = w.steps; t-- > 0;) {
    const double* ga = w.gates.data() + t * 4 * hc;
    const double* ts = w.state_tanh.data() + t * hc;
    const double* s_prev = t > 0 ? w.state.data() + (t - 1) * hc : nullptr;
    const double* w_prev = t > 0 ? w.out.data() + (t - 1) * hc : nullptr;

    for (std::size_t r = 0; r < h; ++r) {
      const double* gi = ga + (0 * h + r) * cols;
      const double* gf = ga + (1 * h + r) * cols;
      const double* gg = ga + (2 * h + r) * cols;
      const double* go = ga + (3 * h + r) * cols;
      const double* tsr = ts + r * cols;
      double* dar_i = da.data() + (0 * h + r) * cols;
      double* dar_f = da.data() + (1 * h + r) * cols;
      double* dar_g = da.data() + (2 * h + r) * cols;
      double* dar_o = da.data() + (3 * h + r) * cols;
      double* dsr = ds.data() + r * cols;
      const double* dwr = dw.data() + r * cols;
      for (std::size_t b = 0; b < cols; ++b) {
        const double d_out = dwr[b];
        const double ds_t = dsr[b] + d_out * go[b] * (1.0 - tsr[b] * tsr[b]);
        const double di = ds_t * gg[b];
        const double df = ds_t * (t > 0 ? s_prev[r * cols + b] : 0.0);
        const double dg = ds_t * gi[b];
        const double d_o = d_out * tsr[b];
        dar_i[b] = di * gi[b] * (1.0 - gi[b]);
        dar_f[b] = df * gf[b] * (1.0 - gf[b]);
        dar_g[b] = dg * (1.0 - gg[b] * gg[b]);
        dar_o[b] = d_o * go[b] * (1.0 - go[b]);
        dsr[b] = ds_t * gf[b];
      }
    }

    for (std::size_t row = 0; row < 4 * h; ++row) {
      double acc = 0.0;
      const double* dar = da.data() + row * cols;
      for (std::size_t b = 0; b < cols; ++b) acc += dar[b];
      g.bias[row] += acc;
    }
    gemm_nt_acc(g.w_in.data(), da.data(), w.x.data() + t * d * cols, 4 * h, cols, d);
    if (t > 0) {
      gemm_nt_acc(g.w_rec.data(), da.data(), w_prev, 4 * h, cols, h);
      std::fill(dw.begin(), dw.end(), 0.0);
      gemm_tn_acc(dw.data(), model.w_rec.data(), da.data(), h, 4 * h, cols);
    }
  }
}

double batch_loss(const BatchWork& w, const int* labels, std::size_t count,
                  std::size_t* correct) {
  double loss = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    const double p0 = w.probs[b];
    const double p1 = w.probs[w.cols + b];
    loss += -std::log(std::max(labels[b] == 0 ? p0 : p1, kProbFloor));
    if (correct && (p1 > p0 ? 1 : 0) == labels[b]) ++*correct;
  }
  return loss;
}

}  // namespace

std::vector<std::array<double, 2>> lstm_forward_batch(const LstmModel& model,
                                                      const std::vector<FeatureSequence>& seqs) {
  require_model_shapes(model);
  if (seqs.empty()) return {};
  for (const auto& s : seqs) {
    require_sequence(model, s);
    if (s.steps != seqs.front().steps)
      throw DimensionError("lstm_forward_batch: sequences must share a length");
  }

  std::vector<std::array<double, 2>> out(seqs.size());
  constexpr std::size_t kChunk = 128;
  BatchWork work;
  std::vector<std::size_t> idx(kChunk);
  for (std::size_t base = 0; base < seqs.size(); base += kChunk) {
    const std::size_t count = std::min(kChunk, seqs.size() - base);
    work.reset(seqs.front().steps, model.hidden, model.input_dim, padded(count), false);
    for (std::size_t b = 0; b < count; ++b) idx[b] = base + b;
    load_batch(work, seqs, idx.data(), count);
    forward_batch(model, work);
    for (std::size_t b = 0; b < count; ++b)
      out[base + b] = {work.probs[b], work.probs[work.cols + b]};
  }
  return out;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, std::size_t t, const TrainConfig& cfg) {
  if (grads.size() != params.size())
    throw DimensionError("adam_step: gradient size does not match parameters");
  if (t == 0) throw ConfigError("adam_step: step index is 1-based");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw DimensionError("adam_step: state size does not match parameters");

  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double mhat = state.m[i] / corr1;
    const double vhat = state.v[i] / corr2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

namespace {

void validate_dataset(const std::vector<LabeledSequence>& dataset) {
  if (dataset.empty()) throw ConfigError("train: empty dataset");
  const std::size_t steps = dataset.front().features.steps;
  for (const auto& ex : dataset) {
    if (ex.label != 0 && ex.label != 1) throw ConfigError("train: labels must be 0 or 1");
    if (ex.features.steps != steps)
      throw ConfigError("train: sequences must share a length");
    if (ex.features.values.size() != steps * 3)
      throw ConfigError("train: sequences must be (real, imag, abs) triples");
  }
}

EpochStats evaluate_impl(const LstmModel& model, const std::vector<LabeledSequence>& dataset) {
  constexpr std::size_t kChunk = 128;
  BatchWork work;
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<int> labels(kChunk);
  for (std::size_t base = 0; base < dataset.size(); base += kChunk) {
    const std::size_t count = std::min(kChunk, dataset.size() - base);
    work.reset(dataset.front().features.steps, model.hidden, model.input_dim,
               padded(count), false);
    for (std::size_t b = 0; b < count; ++b) {
      const FeatureSequence& seq = dataset[base + b].features;
      for (std::size_t t = 0; t < work.steps; ++t)
        for (std::size_t c = 0; c < work.d; ++c)
          work.x[(t * work.d + c) * work.cols + b] = seq.values[t * work.d + c];
      labels[b] = dataset[base + b].label;
    }
    forward_batch(model, work);
    loss += batch_loss(work, labels.data(), count, &correct);
  }
  const double n = static_cast<double>(dataset.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace

EpochStats evaluate(const LstmModel& model, const std::vector<LabeledSequence>& dataset) {
  require_model_shapes(model);
  validate_dataset(dataset);
  return evaluate_impl(model, dataset);
}

LstmModel train(const std::vector<LabeledSequence>& dataset, const TrainConfig& cfg,
                std::vector<EpochStats>* log) {
  validate_dataset(dataset);
  if (cfg.hidden == 0) throw ConfigError("train: hidden size must be positive");
  if (cfg.batch_size == 0) throw ConfigError("train: batch size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");

  Pcg32 init_rng(cfg.seed, substream(StreamPurpose::kMisc, 0, 0));
  LstmModel model = glorot_init(cfg.hidden, 3, init_rng);
  Pcg32 shuffle_rng(cfg.seed, substream(StreamPurpose::kMisc, 0, 1));

  if (log) {
    log->clear();
    log->push_back(evaluate_impl(model, dataset));  // entry 0: before training
  }

  const std::size_t n = dataset.size();
  const std::size_t steps = dataset.front().features.steps;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  Gradients grads;
  grads.w_in.resize(model.w_in.size());
  grads.w_rec.resize(model.w_rec.size());
  grads.bias.resize(model.bias.size());
  grads.dense_w.resize(model.dense_w.size());
  grads.dense_b.resize(model.dense_b.size());
  AdamState st_w_in, st_w_rec, st_bias, st_dense_w, st_dense_b;

  BatchWork work;
  std::vector<int> labels(cfg.batch_size);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the dedicated substream: deterministic per config
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    for (std::size_t base = 0; base < n; base += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - base);
      work.reset(steps, model.hidden, model.input_dim, padded(count), true);
      for (std::size_t b = 0; b < count; ++b) {
        const FeatureSequence& seq = dataset[order[base + b]].features;
        for (std::size_t t = 0; t < steps; ++t)
          for (std::size_t c = 0; c < 3; ++c)
            work.x[(t * 3 + c) * work.cols + b] = seq.values[t * 3 + c];
        labels[b] = dataset[order[base + b]].label;
      }
      forward_batch(model, work);

      std::fill(grads.w_in.begin(), grads.w_in.end(), 0.0);
      std::fill(grads.w_rec.begin(), grads.w_rec.end(), 0.0);
      std::fill(grads.bias.begin(), grads.bias.end(), 0.0);
      std::fill(grads.dense_w.begin(), grads.dense_w.end(), 0.0);
      std::fill(grads.dense_b.begin(), grads.dense_b.end(), 0.0);
      backward_batch(model, work, labels.data(), count, grads);

      const double inv = 1.0 / static_cast<double>(count);  // mean-loss gradients
      for (auto* v : {&grads.w_in, &grads.w_rec, &grads.bias, &grads.dense_w, &grads.dense_b})
        for (auto& x : *v) x *= inv;

      const double loss = batch_loss(work, labels.data(), count, &epoch_correct);
      if (!std::isfinite(loss)) throw NumericFaultError("train: non-finite batch loss");
      epoch_loss += loss;

      ++step;
      adam_step(model.w_in, grads.w_in, st_w_in, step, cfg);
      adam_step(model.w_rec, grads.w_rec, st_w_rec, step, cfg);
      adam_step(model.bias, grads.bias, st_bias, step, cfg);
      adam_step(model.dense_w, grads.dense_w, st_dense_w, step, cfg);
      adam_step(model.dense_b, grads.dense_b, st_dense_b, step, cfg);
    }
    if (log)
      log->push_back({epoch_loss / static_cast<double>(n),
                      static_cast<double>(epoch_correct) / static_cast<double>(n)});
  }
  return model;
}

// ---- checkpoints -----------------------------------------------------------

namespace {
constexpr const char* kCheckpointFormat = "abjam-lstm";
constexpr int kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const LstmModel& model, const TrainConfig& cfg) {
  require_model_shapes(model);
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["hidden"] = model.hidden;
  j["input_dim"] = model.input_dim;
  j["w_in"] = model.w_in;
  j["w_rec"] = model.w_rec;
  j["bias"] = model.bias;
  j["dense_w"] = model.dense_w;
  j["dense_b"] = model.dense_b;
  j["train"] = {{"hidden", cfg.hidden},         {"learning_rate", cfg.learning_rate},
                {"beta1", cfg.beta1},           {"beta2", cfg.beta2},
                {"epsilon", cfg.epsilon},       {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size}, {"seed", cfg.seed}};
  std::ofstream out(path);
  if (!out) throw ConfigError("save_checkpoint: cannot open " + path);
  out << j.dump();
  out << "\n";
  if (!out) throw ConfigError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_checkpoint: bad JSON in " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw ConfigError("load_checkpoint: unrecognized format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ConfigError("load_checkpoint: unsupported version");
    Checkpoint cp;
    cp.model.hidden = j.at("hidden").get<std::size_t>();
    cp.model.input_dim = j.at("input_dim").get<std::size_t>();
    cp.model.w_in = j.at("w_in").get<std::vector<double>>();
    cp.model.w_rec = j.at("w_rec").get<std::vector<double>>();
    cp.model.bias = j.at("bias").get<std::vector<double>>();
    cp.model.dense_w = j.at("dense_w").get<std::vector<double>>();
    cp.model.dense_b = j.at("dense_b").get<std::vector<double>>();
    const auto& t = j.at("train");
    cp.config.hidden = t.at("hidden").get<std::size_t>();
    cp.config.learning_rate = t.at("learning_rate").get<double>();
    cp.config.beta1 = t.at("beta1").get<double>();
    cp.config.beta2 = t.at("beta2").get<double>();
    cp.config.epsilon = t.at("epsilon").get<double>();
    cp.config.epochs = t.at("epochs").get<std::size_t>();
    cp.config.batch_size = t.at("batch_size").get<std::size_t>();
    cp.config.seed = t.at("seed").get<std::uint64_t>();
    require_model_shapes(cp.model);
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_checkpoint: missing or mistyped field in " + path + ": " +
                      e.what());
  }
}

}  // namespace abjam
