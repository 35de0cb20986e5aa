// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ssir/checkpoint.hpp"
#include "ssir/cli.hpp"
#include "ssir/ctc.hpp"
#include "ssir/errors.hpp"
#include "ssir/evaluation.hpp"
#include "ssir/runtime.hpp"
#include "ssir/signal.hpp"
#include "ssir/vocabulary.hpp"

namespace py = pybind11;
using namespace ssir;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ctc::LogProbLattice lattice_from(const Array& logits, bool normalized) {
  if (logits.ndim() != 2) throw ShapeError("expected a [steps, classes] array");
  const auto steps = static_cast<std::size_t>(logits.shape(0));
  const auto classes = static_cast<std::size_t>(logits.shape(1));
  std::span<const double> v(logits.data(), steps * classes);
  if (normalized) return ctc::LogProbLattice::from_log_probs(steps, classes, {v.begin(), v.end()});
  return ctc::LogProbLattice::from_logits(steps, classes, v);
}

py::dict decode_dict(const ctc::DecodeResult& r) {
  py::dict d;
  d["ids"] = r.ids;
  d["log_prob"] = r.log_prob;
  return d;
}

Array to_array(std::size_t rows, std::size_t cols, const std::vector<double>& v) {
  Array out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_ssir, m) {
  m.doc() = "Silent speech recognition from inertial signals: CTC, filters, models and the ssir tool.";
  m.attr("__version__") = cli::version();
  tune_allocator();

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<InsufficientData>(m, "InsufficientData", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InfeasibleTarget>(m, "InfeasibleTarget", base.ptr());

  m.def("standard_vocabulary", [] { return data::Vocabulary::standard().tokens(); },
        "Token strings for ids 1..24; id 0 is the blank.");

  m.def(
      "ctc_loss",
      [](const Array& logits, const std::vector<int>& target) {
        const auto lattice = lattice_from(logits, false);
        const auto r = ctc::ctc_loss(lattice, target);
        return py::make_tuple(r.loss, to_array(lattice.steps, lattice.classes, r.grad_logits));
      },
      py::arg("logits"), py::arg("target"), "Negative log-likelihood and its gradient w.r.t. the logits.");
  m.def(
      "ctc_brute_force",
      [](const Array& logits, const std::vector<int>& target) {
        return ctc::ctc_brute_force(lattice_from(logits, false), target);
      },
      py::arg("logits"), py::arg("target"));
  m.def("collapse", [](const std::vector<int>& path) { return ctc::collapse(path); }, py::arg("path"));
  m.def(
      "greedy_decode", [](const Array& logits) { return decode_dict(ctc::greedy_decode(lattice_from(logits, false))); },
      py::arg("logits"));
  m.def(
      "beam_decode",
      [](const Array& logits, int beam_width) {
        return decode_dict(ctc::beam_decode(lattice_from(logits, false), beam_width));
      },
      py::arg("logits"), py::arg("beam_width") = 8);

  m.def(
      "butterworth_highpass",
      [](const std::vector<double>& x, double cutoff_hz, double fs_hz, int order) {
        return signal::butterworth_highpass(x, cutoff_hz, fs_hz, order);
      },
      py::arg("x"), py::arg("cutoff_hz") = 2.0, py::arg("fs_hz") = signal::kDefaultSampleRateHz, py::arg("order") = 4);
  m.def(
      "preprocess",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& raw, double fs_hz) {
        if (raw.ndim() != 3) throw ShapeError("expected a [steps, channels, axes] array");
        signal::RawWindow w(static_cast<std::size_t>(raw.shape(0)), static_cast<std::size_t>(raw.shape(1)),
                            static_cast<std::size_t>(raw.shape(2)), fs_hz);
        std::copy(raw.data(), raw.data() + raw.size(), w.values.begin());
        const auto f = signal::preprocess(w);
        return to_array(f.steps, f.dims, f.values);
      },
      py::arg("raw"), py::arg("fs_hz") = signal::kDefaultSampleRateHz,
      "Smoothing, high-pass and per-feature z-score; returns [steps, channels * axes].");

  m.def(
      "word_accuracy",
      [](const std::vector<std::vector<int>>& refs, const std::vector<std::vector<int>>& hyps) {
        return eval::word_accuracy(refs, hyps);
      },
      py::arg("refs"), py::arg("hyps"));

  m.def(
      "checkpoint_info",
      [](const std::filesystem::path& path) {
        const auto ck = model::load_checkpoint(path);
        py::dict d;
        d["vocabulary"] = ck.vocabulary.tokens();
        d["channels"] = ck.inputs.channels;
        d["axes"] = ck.inputs.axes;
        d["seed"] = ck.seed;
        d["parameters"] = ck.params.parameter_count();
        d["payload_sha256"] = model::payload_hash(ck.params);
        d["hidden_dim"] = ck.params.config.hidden_dim;
        d["vocab_size"] = ck.params.config.vocab_size;
        return d;
      },
      py::arg("path"));

  m.def(
      "run",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "ssir");
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Runs the ssir tool in-process and returns its exit code.");
}
