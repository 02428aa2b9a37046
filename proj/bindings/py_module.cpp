/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "bandflow/checkpoint.hpp"
#include "bandflow/cli.hpp"
#include "bandflow/dsp.hpp"
#include "bandflow/flow.hpp"
#include "bandflow/inference.hpp"
#include "bandflow/metrics.hpp"
#include "bandflow/wav.hpp"

namespace py = pybind11;

namespace bandflow {
namespace {

using DoubleArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const DoubleArray& a) {
  std::vector<int> shape(static_cast<size_t>(a.ndim()));
  for (py::ssize_t i = 0; i < a.ndim(); ++i) {
    shape[static_cast<size_t>(i)] = static_cast<int>(a.shape(i));
  }
  Tensor t(shape);
  std::copy_n(a.data(), t.numel(), t.data());
  return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> a(shape);
  std::copy_n(t.data(), t.numel(), a.mutable_data());
  return a;
}

Waveform waveform_from(const DoubleArray& samples, int rate) {
  if (samples.ndim() != 1) {
    throw std::invalid_argument("expected a 1-D sample array");
  }
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(samples.data(), samples.data() + samples.shape(0));
  return w;
}

ComplexSpectrogram spec_from(const DoubleArray& grid, bool compressed) {
  ComplexSpectrogram s;
  s.coeffs = tensor_from_array(grid);
  if (s.coeffs.rank() != 3 || s.coeffs.shape()[2] != 2) {
    throw std::invalid_argument("expected an [F, T, 2] grid");
  }
  s.compressed = compressed;
  s.alpha = compressed ? kCompressAlpha : 0.0;
  return s;
}

/// Checkpoint-backed inference handle.
class Upsampler {
 public:
  explicit Upsampler(const std::string& checkpoint_path) {
    model_ = model_from_checkpoint(load_checkpoint(checkpoint_path));
  }

  py::array_t<double> upsample(const DoubleArray& samples, int rate,
                               double omega, int steps, uint64_t seed,
                               bool limiter) const {
    UpsampleOptions opts;
    opts.omega = omega;
    opts.steps = steps;
    opts.seed = seed;
    opts.limiter = limiter;
    const Waveform out =
        super_resolve(waveform_from(samples, rate), *model_, opts);
    py::array_t<double> a(static_cast<py::ssize_t>(out.samples.size()));
    std::copy(out.samples.begin(), out.samples.end(), a.mutable_data());
    return a;
  }

  long param_count() const { return model_->count_total(); }
  std::string config_json() const { return config_to_json(model_->config()); }

 private:
  std::unique_ptr<Model> model_;
};

}  // namespace
}  // namespace bandflow

PYBIND11_MODULE(_core, m) {
  using namespace bandflow;
  m.doc() = "Flow-matching audio super-resolution core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError",
                                       PyExc_ArithmeticError);

  m.attr("N_FFT") = kNFft;
  m.attr("HOP") = kHop;
  m.attr("BINS") = kBins;
  m.attr("MIN_CUTOFF_BINS") = kMinCutoffBins;
  m.attr("GEN_BINS") = kGenBins;
  m.attr("COMPRESS_ALPHA") = kCompressAlpha;
  m.attr("FULL_RATE") = kFullRate;

  m.def("read_wav", [](const std::string& path) {
    const Waveform w = read_wav(path);
    py::array_t<double> a(static_cast<py::ssize_t>(w.samples.size()));
    std::copy(w.samples.begin(), w.samples.end(), a.mutable_data());
    return py::make_tuple(a, w.sample_rate);
  });
  m.def(
      "write_wav",
      [](const std::string& path, const DoubleArray& samples, int rate,
         const std::string& format) {
        const WavFormat fmt = format == "float32" ? WavFormat::kFloat32
                                                  : WavFormat::kPcm16;
        write_wav(path, waveform_from(samples, rate), fmt);
      },
      py::arg("path"), py::arg("samples"), py::arg("rate"),
      py::arg("format") = "pcm16");

  m.def("sinc_resample",
        [](const DoubleArray& samples, int rate, int target_rate) {
          const Waveform out =
              sinc_resample(waveform_from(samples, rate), target_rate);
          py::array_t<double> a(static_cast<py::ssize_t>(out.samples.size()));
          std::copy(out.samples.begin(), out.samples.end(), a.mutable_data());
          return a;
        });
  m.def("lowpass_hann",
        [](const DoubleArray& samples, int rate, double cutoff_hz) {
          const Waveform out =
              lowpass_hann(waveform_from(samples, rate), cutoff_hz);
          py::array_t<double> a(static_cast<py::ssize_t>(out.samples.size()));
          std::copy(out.samples.begin(), out.samples.end(), a.mutable_data());
          return a;
        });

  m.def("stft", [](const DoubleArray& samples) {
    return array_from_tensor(stft(waveform_from(samples, kFullRate)).coeffs);
  });
  m.def(
      "istft",
      [](const DoubleArray& grid, long length) {
        const Waveform out = istft(spec_from(grid, false), kFullRate, length);
        py::array_t<double> a(static_cast<py::ssize_t>(out.samples.size()));
        std::copy(out.samples.begin(), out.samples.end(), a.mutable_data());
        return a;
      },
      py::arg("grid"), py::arg("length") = -1);
  m.def(
      "compress",
      [](const DoubleArray& grid, double alpha) {
        return array_from_tensor(compress(spec_from(grid, false), alpha)
                                     .coeffs);
      },
      py::arg("grid"), py::arg("alpha") = kCompressAlpha);
  m.def(
      "expand",
      [](const DoubleArray& grid, double alpha) {
        return array_from_tensor(expand(spec_from(grid, true), alpha).coeffs);
      },
      py::arg("grid"), py::arg("alpha") = kCompressAlpha);

  m.def("nearest_supported_rate", &nearest_supported_rate);
  m.def("cutoff_bins_for_rate", &cutoff_bins_for_rate);

  m.def(
      "sample_path",
      [](const DoubleArray& x_h, const DoubleArray& x_0, double t,
         double sigma_min) {
        return array_from_tensor(sample_path(tensor_from_array(x_h),
                                             tensor_from_array(x_0), t,
                                             PathConfig{sigma_min}));
      },
      py::arg("x_h"), py::arg("x_0"), py::arg("t"),
      py::arg("sigma_min") = 0.1);
  m.def(
      "target_field",
      [](const DoubleArray& x_h, const DoubleArray& x_0, double sigma_min) {
        return array_from_tensor(target_field(tensor_from_array(x_h),
                                              tensor_from_array(x_0),
                                              PathConfig{sigma_min}));
      },
      py::arg("x_h"), py::arg("x_0"), py::arg("sigma_min") = 0.1);
  m.def("cfm_loss", [](const DoubleArray& v, const DoubleArray& u) {
    return cfm_loss(tensor_from_array(v), tensor_from_array(u));
  });
  m.def("cfg_combine",
        [](const DoubleArray& vc, const DoubleArray& vu, double omega) {
          return array_from_tensor(cfg_combine(tensor_from_array(vc),
                                               tensor_from_array(vu), omega));
        });
  m.def("midpoint_solve",
        [](const std::function<py::array_t<double>(double, py::array_t<double>)>&
               field,
           const DoubleArray& x_0, int steps) {
          FieldFn fn = [&](double t, const Tensor& x) {
            DoubleArray out = field(t, array_from_tensor(x));
            return tensor_from_array(out);
          };
          return array_from_tensor(
              midpoint_solve(fn, tensor_from_array(x_0), steps));
        });

  m.def(
      "lsd",
      [](const DoubleArray& ref, const DoubleArray& est, int rate) {
        return lsd(waveform_from(ref, rate), waveform_from(est, rate));
      },
      py::arg("ref"), py::arg("est"), py::arg("rate") = kFullRate);
  m.def(
      "lsd_hf",
      [](const DoubleArray& ref, const DoubleArray& est, double cutoff_hz,
         int rate) {
        return lsd_hf(waveform_from(ref, rate), waveform_from(est, rate),
                      cutoff_hz);
      },
      py::arg("ref"), py::arg("est"), py::arg("cutoff_hz"),
      py::arg("rate") = kFullRate);

  m.def(
      "default_config_json",
      [](bool toy) {
        RunConfig cfg;
        if (toy) {
          cfg.model = VfeConfig::tiny();
          cfg.train = TrainConfig::toy();
        }
        return run_config_to_json(cfg);
      },
      py::arg("toy") = false);

  py::class_<Upsampler>(m, "Upsampler")
      .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
      .def("upsample", &Upsampler::upsample, py::arg("samples"),
           py::arg("rate"), py::arg("omega") = 1.5, py::arg("steps") = 4,
           py::arg("seed") = 0, py::arg("limiter") = false)
      .def_property_readonly("param_count", &Upsampler::param_count)
      .def_property_readonly("config_json", &Upsampler::config_json);
}
