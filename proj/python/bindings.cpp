// Python bindings over the main native operations: channel synthesis,
// coding, the likelihood detector, rate estimation, and the learned
// detector (features, training, prediction, checkpoints).  Matrices cross
// the boundary as numpy complex128 arrays.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "abjam/bench.hpp"
#include "abjam/capacity.hpp"
#include "abjam/dl_detector.hpp"

namespace py = pybind11;
using namespace abjam;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<std::complex<double>> to_numpy(const CMatrix& m) {
  py::array_t<std::complex<double>> arr({m.rows(), m.cols()});
  std::memcpy(arr.mutable_data(), m.data().data(), sizeof(cdouble) * m.data().size());
  return arr;
}

py::array_t<std::complex<double>> view_to_numpy(CMatrixView v) {
  py::array_t<std::complex<double>> arr({v.rows, v.cols});
  std::memcpy(arr.mutable_data(), v.ptr, sizeof(cdouble) * v.rows * v.cols);
  return arr;
}

CMatrix matrix_from_numpy(const ComplexArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D complex array");
  CMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.data().data(), a.data(), sizeof(cdouble) * m.data().size());
  return m;
}

std::vector<cdouble> vector_from_numpy(const ComplexArray& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-D complex array");
  std::vector<cdouble> v(static_cast<std::size_t>(a.shape(0)));
  std::memcpy(v.data(), a.data(), sizeof(cdouble) * v.size());
  return v;
}

py::array_t<double> features_to_numpy(const FeatureSequence& f) {
  py::array_t<double> arr({f.steps, static_cast<std::size_t>(3)});
  std::memcpy(arr.mutable_data(), f.values.data(), sizeof(double) * f.values.size());
  return arr;
}

FeatureSequence features_from_numpy(const RealArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3)
    throw DimensionError("feature sequences are (steps, 3) arrays");
  FeatureSequence f;
  f.steps = static_cast<std::size_t>(a.shape(0));
  f.values.assign(a.data(), a.data() + f.steps * 3);
  return f;
}

}  // namespace

PYBIND11_MODULE(_abjam, mod) {
  mod.doc() = "ambient-backscatter anti-jamming laboratory";

  py::register_exception<Error>(mod, "AbjamError", PyExc_RuntimeError);

  mod.def("db_to_linear", &db_to_linear, py::arg("db"));
  mod.def("linear_to_db", &linear_to_db, py::arg("value"));
  mod.def("link_budget", &link_budget, py::arg("p_tx"), py::arg("g_tx"), py::arg("g_rx"),
          py::arg("distance"), py::arg("exponent"), py::arg("wavelength"));
  mod.def("binary_entropy", &binary_entropy, py::arg("p"));

  py::class_<Pcg32>(mod, "Pcg32")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed") = 0x853c49e6748fea9bULL,
           py::arg("stream") = 0)
      .def("uniform", &Pcg32::uniform)
      .def("gaussian", &Pcg32::gaussian)
      .def("cscg", &Pcg32::cscg);

  py::class_<SystemConfig>(mod, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("antennas", &SystemConfig::antennas)
      .def_readwrite("spreading", &SystemConfig::spreading)
      .def_readwrite("frame_bits", &SystemConfig::frame_bits)
      .def_readwrite("pilot_bits", &SystemConfig::pilot_bits)
      .def_readwrite("alpha_tr", &SystemConfig::alpha_tr)
      .def_readwrite("alpha_jr", &SystemConfig::alpha_jr)
      .def_readwrite("alpha_t_rel", &SystemConfig::alpha_t_rel)
      .def_readwrite("alpha_j_rel", &SystemConfig::alpha_j_rel)
      .def_readwrite("theta0", &SystemConfig::theta0)
      .def_readwrite("seed", &SystemConfig::seed)
      .def("alpha_tb", &SystemConfig::alpha_tb)
      .def("alpha_jb", &SystemConfig::alpha_jb)
      .def("validate", &SystemConfig::validate);

  py::class_<ChannelRealization>(mod, "ChannelRealization")
      .def_readwrite("f_t", &ChannelRealization::f_t)
      .def_readwrite("f_j", &ChannelRealization::f_j)
      .def_readwrite("f_b", &ChannelRealization::f_b)
      .def_readwrite("g_t", &ChannelRealization::g_t)
      .def_readwrite("g_j", &ChannelRealization::g_j);

  py::class_<BackscatterFrame>(mod, "BackscatterFrame")
      .def_readonly("bits", &BackscatterFrame::bits)
      .def_readonly("pilot_count", &BackscatterFrame::pilot_count)
      .def_readonly("encoded", &BackscatterFrame::encoded);

  py::class_<ReceivedBlock>(mod, "ReceivedBlock")
      .def_readonly("config", &ReceivedBlock::config)
      .def_readonly("encoded", &ReceivedBlock::encoded)
      .def("symbol", [](const ReceivedBlock& b, std::size_t i) {
        if (i >= b.config.frame_bits) throw DimensionError("symbol index out of range");
        return view_to_numpy(b.symbol(i));
      }, py::arg("index"));

  mod.def("diff_encode", &diff_encode, py::arg("bits"), py::arg("reference") = kDiffReference);
  mod.def("diff_decode", &diff_decode, py::arg("states"), py::arg("reference") = kDiffReference);
  mod.def("make_frame", &make_frame, py::arg("data_bits"), py::arg("pilot_count"));

  mod.def("sample_cscg", &sample_cscg, py::arg("count"), py::arg("rng"));
  mod.def("draw_channel", &draw_channel, py::arg("config"), py::arg("rng"));
  mod.def("received_symbol",
          [](const SystemConfig& cfg, const ChannelRealization& ch, int e, Pcg32& rng) {
            return to_numpy(received_symbol(cfg, ch, e, rng));
          },
          py::arg("config"), py::arg("channel"), py::arg("state"), py::arg("rng"));
  mod.def("synthesize_frame", &synthesize_frame, py::arg("config"), py::arg("channel"),
          py::arg("encoded"), py::arg("rng"));

  py::class_<CovariancePair>(mod, "CovariancePair")
      .def(py::init([](const ComplexArray& k0, const ComplexArray& k1) {
             return CovariancePair(matrix_from_numpy(k0), matrix_from_numpy(k1));
           }),
           py::arg("k0"), py::arg("k1"))
      .def("k0", [](const CovariancePair& p) { return to_numpy(p.k0()); })
      .def("k1", [](const CovariancePair& p) { return to_numpy(p.k1()); })
      .def("log_det_k0", &CovariancePair::log_det_k0)
      .def("log_det_k1", &CovariancePair::log_det_k1)
      .def("log_pdf0", [](const CovariancePair& p, const ComplexArray& y) {
        return p.log_pdf0(vector_from_numpy(y));
      }, py::arg("y"))
      .def("log_pdf1", [](const CovariancePair& p, const ComplexArray& y) {
        return p.log_pdf1(vector_from_numpy(y));
      }, py::arg("y"));

  mod.def("covariance_matrices", &covariance_matrices, py::arg("config"), py::arg("channel"));
  mod.def("log_pdf", [](const ComplexArray& y, const ComplexArray& k) {
    return log_pdf(vector_from_numpy(y), matrix_from_numpy(k));
  }, py::arg("y"), py::arg("k"));
  mod.def("detect_symbol", [](const ComplexArray& y, const CovariancePair& pair) {
    const CMatrix m = matrix_from_numpy(y);
    return detect_symbol(m, pair);
  }, py::arg("samples"), py::arg("pair"));
  mod.def("detect_frame", &detect_frame, py::arg("block"), py::arg("pair"));

  mod.def("posterior_bit0", [](const ComplexArray& y, double theta0, const CovariancePair& p) {
    return posterior_bit0(vector_from_numpy(y), theta0, p);
  }, py::arg("y"), py::arg("theta0"), py::arg("pair"));
  mod.def("mutual_information",
          [](double theta0, const CovariancePair& pair, std::size_t samples, Pcg32& rng) {
            const MiEstimate est = mutual_information(theta0, pair, samples, rng);
            return py::make_tuple(est.value, est.std_error);
          },
          py::arg("theta0"), py::arg("pair"), py::arg("samples"), py::arg("rng"));
  py::class_<RateEstimate>(mod, "RateEstimate")
      .def_readonly("rate_bits", &RateEstimate::rate_bits)
      .def_readonly("theta0_star", &RateEstimate::theta0_star)
      .def_readonly("std_error", &RateEstimate::std_error)
      .def_readonly("mc_samples", &RateEstimate::mc_samples);
  mod.def("max_backscatter_rate", &max_backscatter_rate, py::arg("pair"), py::arg("samples"),
          py::arg("grid_step"), py::arg("rng"));

  mod.def("sample_covariance", [](const ComplexArray& y) {
    const CMatrix m = matrix_from_numpy(y);
    return to_numpy(sample_covariance(m));
  }, py::arg("samples"));
  mod.def("pilot_covariances", [](const ReceivedBlock& block, const BackscatterFrame& frame) {
    const PilotCovariances pc = pilot_covariances(block, frame);
    return py::make_tuple(to_numpy(pc.k0), to_numpy(pc.k1));
  }, py::arg("block"), py::arg("frame"));
  mod.def("whiten", [](const ComplexArray& c, const ComplexArray& k0, const ComplexArray& k1) {
    const auto w = whiten(matrix_from_numpy(c), matrix_from_numpy(k0), matrix_from_numpy(k1));
    return py::make_tuple(to_numpy(w.first), to_numpy(w.second));
  }, py::arg("c"), py::arg("kt0"), py::arg("kt1"));
  mod.def("featurize", [](const ComplexArray& c0, const ComplexArray& c1) {
    return features_to_numpy(featurize(matrix_from_numpy(c0), matrix_from_numpy(c1)));
  }, py::arg("c0"), py::arg("c1"));
  mod.def("frame_features", [](const ReceivedBlock& block, const BackscatterFrame& frame) {
    py::list out;
    for (const FeatureSequence& f : frame_features(block, frame))
      out.append(features_to_numpy(f));
    return out;
  }, py::arg("block"), py::arg("frame"));

  py::class_<TrainConfig>(mod, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("epsilon", &TrainConfig::epsilon)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<LstmModel>(mod, "LstmModel")
      .def_readonly("hidden", &LstmModel::hidden)
      .def_readonly("input_dim", &LstmModel::input_dim);

  py::class_<EpochStats>(mod, "EpochStats")
      .def_readonly("loss", &EpochStats::loss)
      .def_readonly("accuracy", &EpochStats::accuracy);

  mod.def("lstm_forward", [](const LstmModel& model, const RealArray& seq) {
    const auto p = lstm_forward(model, features_from_numpy(seq));
    return py::make_tuple(p[0], p[1]);
  }, py::arg("model"), py::arg("sequence"));
  mod.def("train",
          [](const std::vector<RealArray>& sequences, const std::vector<int>& labels,
             const TrainConfig& cfg) {
            if (sequences.size() != labels.size())
              throw DimensionError("train: sequences and labels must pair up");
            std::vector<LabeledSequence> dataset(sequences.size());
            for (std::size_t i = 0; i < sequences.size(); ++i)
              dataset[i] = {features_from_numpy(sequences[i]), labels[i]};
            std::vector<EpochStats> log;
            LstmModel model = train(dataset, cfg, &log);
            return py::make_tuple(std::move(model), std::move(log));
          },
          py::arg("sequences"), py::arg("labels"), py::arg("config"));
  mod.def("predict_frame", &predict_frame, py::arg("model"), py::arg("block"), py::arg("frame"));
  mod.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"),
          py::arg("config"));
  mod.def("load_checkpoint", [](const std::string& path) {
    Checkpoint cp = load_checkpoint(path);
    return py::make_tuple(std::move(cp.model), cp.config);
  }, py::arg("path"));
}
