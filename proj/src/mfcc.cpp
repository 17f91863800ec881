// src/mfcc.cpp

// Copyright 2026  The wmil Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "wmil/dsp.hpp"
#include "wmil/error.hpp"

namespace wmil {

namespace {

// The FFTW planner is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }

  // |X[k]| for k in [0, n/2].
  void magnitude(std::vector<double>& out) {
    fftw_execute(plan_);
    out.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::hypot(out_[k][0], out_[k][1]);
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters on the linear-frequency FFT bins, evenly spaced in mel.
std::vector<std::vector<double>> mel_filterbank(const MfccConfig& cfg, std::size_t fft_size,
                                                double sample_rate) {
  const double high = cfg.high_freq_hz > 0.0 ? cfg.high_freq_hz : sample_rate / 2.0;
  const double mel_lo = hz_to_mel(cfg.low_freq_hz);
  const double mel_hi = hz_to_mel(high);
  const auto n = static_cast<std::size_t>(cfg.n_mel_filters);
  std::vector<double> edges(n + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n + 1));
  }
  const std::size_t n_bins = fft_size / 2 + 1;
  std::vector<std::vector<double>> bank(n, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < n; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      if (f > left && f < centre) {
        bank[m][k] = (f - left) / (centre - left);
      } else if (f >= centre && f < right) {
        bank[m][k] = (right - f) / (right - centre);
      }
    }
  }
  return bank;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

std::size_t frame_length_samples(const MfccConfig& cfg, double sample_rate) {
  return static_cast<std::size_t>(std::lround(cfg.frame_len_s * sample_rate));
}

std::size_t frame_hop_samples(const MfccConfig& cfg, double sample_rate) {
  return static_cast<std::size_t>(std::lround(cfg.frame_hop_s * sample_rate));
}

std::size_t plan_frames(std::size_t n_samples, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0 || hop == 0 || n_samples < frame_len) return 0;
  return (n_samples - frame_len) / hop + 1;
}

void MfccConfig::validate(double sample_rate) const {
  if (!(sample_rate > 0.0)) throw ConfigError("mfcc: sample rate must be positive");
  if (n_coeffs < 1 || n_mel_filters < 1) throw ConfigError("mfcc: counts must be positive");
  if (n_coeffs > n_mel_filters) {
    throw ConfigError("mfcc: n_coeffs exceeds n_mel_filters");
  }
  if (!(log_floor > 0.0)) throw ConfigError("mfcc: log_floor must be positive");
  const auto len = frame_length_samples(*this, sample_rate);
  const auto hop = frame_hop_samples(*this, sample_rate);
  if (len < 2 || hop < 1) throw ConfigError("mfcc: frame too short for the sample rate");
  if (fft_size != 0 && static_cast<std::size_t>(fft_size) < len) {
    throw ConfigError("mfcc: fft_size smaller than the frame length");
  }
  if (high_freq_hz > sample_rate / 2.0 || low_freq_hz < 0.0 ||
      (high_freq_hz > 0.0 && high_freq_hz <= low_freq_hz)) {
    throw ConfigError("mfcc: invalid filterbank frequency range");
  }
}

Matrix mfcc(const Waveform& w, const MfccConfig& cfg) {
  cfg.validate(w.sample_rate);
  const std::size_t len = frame_length_samples(cfg, w.sample_rate);
  const std::size_t hop = frame_hop_samples(cfg, w.sample_rate);
  const std::size_t n_frames = plan_frames(w.samples.size(), len, hop);
  if (n_frames == 0) {
    throw Error("mfcc: waveform of " + std::to_string(w.samples.size()) +
                " samples is shorter than one frame (" + std::to_string(len) + ")");
  }
  const std::size_t fft_size =
      cfg.fft_size > 0 ? static_cast<std::size_t>(cfg.fft_size) : next_pow2(len);
  const auto bank = mel_filterbank(cfg, fft_size, w.sample_rate);
  const auto n_mel = bank.size();
  const auto n_out = static_cast<std::size_t>(cfg.n_coeffs);

  std::vector<double> window(len);
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(len - 1));
  }
  Matrix dct(n_out, n_mel);
  const double scale = std::sqrt(2.0 / static_cast<double>(n_mel));
  for (std::size_t i = 0; i < n_out; ++i) {
    for (std::size_t m = 0; m < n_mel; ++m) {
      dct(i, m) = scale * std::cos(std::numbers::pi * static_cast<double>(i) *
                                   (static_cast<double>(m) + 0.5) / static_cast<double>(n_mel));
    }
  }

  RealFft fft(fft_size);
  std::vector<double> spectrum;
  std::vector<double> log_energy(n_mel);
  Matrix out(n_frames, n_out);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* x = w.samples.data() + t * hop;
    double* buf = fft.input();
    // Pre-emphasis within the frame; the first sample uses itself as predecessor.
    buf[0] = x[0] * (1.0 - cfg.pre_emphasis) * window[0];
    for (std::size_t i = 1; i < len; ++i) {
      buf[i] = (x[i] - cfg.pre_emphasis * x[i - 1]) * window[i];
    }
    std::fill(buf + len, buf + fft_size, 0.0);
    fft.magnitude(spectrum);
    for (std::size_t m = 0; m < n_mel; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < spectrum.size(); ++k) e += bank[m][k] * spectrum[k];
      log_energy[m] = std::log(std::max(e, cfg.log_floor));
    }
    auto row = out.row(t);
    for (std::size_t i = 0; i < n_out; ++i) row[i] = dot(dct.row(i), log_energy);
  }
  return out;
}

}  // namespace wmil
