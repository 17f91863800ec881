// include/wmil/dsp.hpp

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

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "wmil/matrix.hpp"

namespace wmil {

struct Waveform {
  std::vector<double> samples;  // mono, in [-1, 1]
  double sample_rate = 0.0;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Reads RIFF/WAVE with 16-bit integer PCM or 32-bit float samples.
// Multi-channel input is downmixed by the channel mean.
Waveform read_wav(const std::filesystem::path& path);

enum class WavEncoding { pcm16, float32 };

// Writes interleaved channel data; `channels` > 1 repeats nothing, the caller
// supplies frames * channels samples.
void write_wav(const std::filesystem::path& path, const std::vector<double>& interleaved,
               int channels, int sample_rate, WavEncoding encoding = WavEncoding::pcm16);

struct MfccConfig {
  int n_coeffs = 21;           // C0..C20
  double frame_len_s = 0.020;
  double frame_hop_s = 0.010;
  int n_mel_filters = 26;
  int fft_size = 0;            // 0: next power of two >= frame length
  double pre_emphasis = 0.97;
  double log_floor = 1e-10;
  double low_freq_hz = 0.0;
  double high_freq_hz = 0.0;   // 0: Nyquist

  void validate(double sample_rate) const;
};

std::size_t frame_length_samples(const MfccConfig& cfg, double sample_rate);
std::size_t frame_hop_samples(const MfccConfig& cfg, double sample_rate);

// floor((n_samples - frame_len) / hop) + 1, or 0 when the signal is shorter
// than one frame.
std::size_t plan_frames(std::size_t n_samples, std::size_t frame_len, std::size_t hop);

// One row per frame: pre-emphasis, Hamming window, magnitude spectrum, mel
// filterbank, floored log, DCT-II truncated to n_coeffs.
Matrix mfcc(const Waveform& w, const MfccConfig& cfg);

}  // namespace wmil
