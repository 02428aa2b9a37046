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
#include "bandflow/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "bandflow/inference.hpp"
#include "bandflow/wav.hpp"
#include "json.hpp"

namespace bandflow {

namespace {

constexpr double kPowerFloor = 1e-10;

double log_power(double re, double im) {
  return std::log10(std::max(re * re + im * im, kPowerFloor));
}

std::string mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::kModel:
      return "model";
    case EvalMode::kBaseline:
      return "baseline";
    case EvalMode::kSelf:
      return "self";
  }
  return "?";
}

}  // namespace

int freq_to_bin(double freq_hz, int sample_rate) {
  if (sample_rate <= 0) throw std::invalid_argument("freq_to_bin: bad rate");
  const double bin_hz = static_cast<double>(sample_rate) / kNFft;
  return static_cast<int>(std::lround(freq_hz / bin_hz));
}

double lsd_banded(const Waveform& ref, const Waveform& est, int bin_from) {
  if (ref.sample_rate != est.sample_rate) {
    throw DataError("lsd: sample rate mismatch");
  }
  if (ref.samples.size() != est.samples.size()) {
    throw DataError("lsd: length mismatch (" +
                    std::to_string(ref.samples.size()) + " vs " +
                    std::to_string(est.samples.size()) + ")");
  }
  if (bin_from < 0 || bin_from >= kBins) {
    throw std::invalid_argument("lsd: band start outside [0, F)");
  }
  const ComplexSpectrogram a = stft(ref);
  const ComplexSpectrogram b = stft(est);
  const int frames = a.frames();
  const int nbins = kBins - bin_from;
  double frame_sum = 0.0;
  for (int t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (int f = bin_from; f < kBins; ++f) {
      const double d = log_power(a.coeffs.at(f, t, 0), a.coeffs.at(f, t, 1)) -
                       log_power(b.coeffs.at(f, t, 0), b.coeffs.at(f, t, 1));
      acc += d * d;
    }
    frame_sum += std::sqrt(acc / nbins);
  }
  return frame_sum / frames;
}

double lsd(const Waveform& ref, const Waveform& est) {
  return lsd_banded(ref, est, 0);
}

double lsd_hf(const Waveform& ref, const Waveform& est, double cutoff_hz) {
  if (cutoff_hz >= ref.sample_rate / 2.0) {
    throw std::invalid_argument("lsd_hf: cutoff at or above Nyquist");
  }
  return lsd_banded(ref, est, freq_to_bin(cutoff_hz, ref.sample_rate));
}

EvalReport evaluate_manifest(const std::vector<ManifestEntry>& entries,
                             const Model* model, const EvalOptions& opts) {
  if (opts.mode == EvalMode::kModel && model == nullptr) {
    throw UsageError("evaluate_manifest: model mode requires parameters");
  }
  for (int rate : opts.rates) {
    cutoff_bins_for_rate(rate);  // throws with the supported list
  }

  EvalReport report;
  report.opts = opts;
  std::map<std::string, std::pair<double, long>> domain_acc;
  for (const auto& entry : entries) {
    Waveform ref = sinc_resample(read_wav(entry.path), kFullRate);
    for (int rate : opts.rates) {
      Waveform lr = make_lr(ref, rate);
      const auto t0 = std::chrono::steady_clock::now();
      Waveform est;
      switch (opts.mode) {
        case EvalMode::kModel: {
          UpsampleOptions up;
          up.omega = opts.omega;
          up.steps = opts.steps;
          up.seed = opts.seed;
          est = super_resolve(lr, *model, up);
          break;
        }
        case EvalMode::kBaseline:
          est = sinc_resample(lr, kFullRate);
          break;
        case EvalMode::kSelf:
          est = ref;
          break;
      }
      const double ms =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - t0)
              .count();

      // iSTFT/resampling may differ from the reference by a few samples.
      const size_t n = std::min(ref.samples.size(), est.samples.size());
      Waveform ref_cut{std::vector<double>(ref.samples.begin(),
                                           ref.samples.begin() + n),
                       kFullRate};
      Waveform est_cut{std::vector<double>(est.samples.begin(),
                                           est.samples.begin() + n),
                       kFullRate};

      EvalRow row;
      row.item = entry.path;
      row.domain = entry.domain;
      row.input_rate = rate;
      row.lsd_hf = lsd_hf(ref_cut, est_cut, rate / 2.0);
      row.lsd_full = lsd(ref_cut, est_cut);
      row.runtime_ms = ms;
      report.rows.push_back(row);
      auto& [sum, count] = domain_acc[entry.domain];
      sum += row.lsd_hf;
      count += 1;
    }
  }
  for (const auto& [domain, acc] : domain_acc) {
    report.domain_mean_lsd_hf[domain] = acc.first / acc.second;
  }
  return report;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("report: cannot write " + path);
  out << "item,domain,input_rate,lsd_hf,lsd_full,runtime_ms\n";
  char line[512];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%s,%s,%d,%.6f,%.6f,%.3f\n",
                  r.item.c_str(), r.domain.c_str(), r.input_rate, r.lsd_hf,
                  r.lsd_full, r.runtime_ms);
    out << line;
  }
  if (!out) throw DataError("report: write failed: " + path);
}

void write_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  j["config"] = {{"rates", report.opts.rates},
                 {"mode", mode_name(report.opts.mode)},
                 {"omega", report.opts.omega},
                 {"steps", report.opts.steps},
                 {"seed", report.opts.seed}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"item", r.item},
                         {"domain", r.domain},
                         {"input_rate", r.input_rate},
                         {"lsd_hf", r.lsd_hf},
                         {"lsd_full", r.lsd_full},
                         {"runtime_ms", r.runtime_ms}});
  }
  j["domain_mean_lsd_hf"] = report.domain_mean_lsd_hf;
  std::ofstream out(path);
  if (!out) throw DataError("report: cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("report: write failed: " + path);
}

}  // namespace bandflow
