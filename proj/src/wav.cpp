// src/wav.cpp

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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "wmil/binary_io.hpp"
#include "wmil/dsp.hpp"
#include "wmil/error.hpp"

namespace wmil {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const std::string where = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(where + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const bool is_data = std::memcmp(chunk, "data", 4) == 0;
    if (!is_data && body + len > bytes.size()) throw Error(where + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw Error(where + ": short fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (len < 26) throw Error(where + ": short extensible fmt chunk");
        format = le16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (is_data) {
      if (body + len > bytes.size()) throw Error(where + ": truncated data chunk");
      data = bytes.data() + body;
      data_len = len;
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw Error(where + ": missing fmt chunk");
  if (data == nullptr) throw Error(where + ": missing data chunk");
  if (channels == 0 || rate == 0) throw Error(where + ": invalid channel count or rate");

  std::size_t sample_bytes = 0;
  if (format == kFormatPcm && bits == 16) {
    sample_bytes = 2;
  } else if (format == kFormatFloat && bits == 32) {
    sample_bytes = 4;
  } else {
    throw Error(where + ": unsupported codec (format " + std::to_string(format) + ", " +
                std::to_string(bits) + " bits)");
  }
  const std::size_t frame_bytes = sample_bytes * channels;
  if (data_len % frame_bytes != 0) throw Error(where + ": truncated sample frame");
  const std::size_t n_frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* s = data + i * frame_bytes + c * sample_bytes;
      if (sample_bytes == 2) {
        acc += static_cast<std::int16_t>(le16(s)) / 32768.0;
      } else {
        acc += static_cast<double>(std::bit_cast<float>(le32(s)));
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& interleaved,
               int channels, int sample_rate, WavEncoding encoding) {
  if (channels <= 0 || sample_rate <= 0) throw Error("write_wav: invalid channels or rate");
  if (interleaved.size() % static_cast<std::size_t>(channels) != 0) {
    throw Error("write_wav: sample count is not a multiple of the channel count");
  }
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint32_t data_len = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));
  ByteWriter w;
  w.magic("RIFF");
  w.u32(36 + data_len);
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  const std::uint16_t format = encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat;
  w.u8(format & 0xFF);
  w.u8(format >> 8);
  w.u8(static_cast<std::uint8_t>(channels));
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(sample_rate));
  w.u32(static_cast<std::uint32_t>(sample_rate * channels * (bits / 8)));
  const auto block_align = static_cast<std::uint16_t>(channels * (bits / 8));
  w.u8(block_align & 0xFF);
  w.u8(block_align >> 8);
  w.u8(static_cast<std::uint8_t>(bits));
  w.u8(0);
  w.magic("data");
  w.u32(data_len);
  for (double v : interleaved) {
    if (encoding == WavEncoding::pcm16) {
      const double clamped = std::clamp(v, -1.0, 32767.0 / 32768.0);
      const auto s = static_cast<std::int16_t>(std::lround(clamped * 32768.0));
      const auto u = static_cast<std::uint16_t>(s);
      w.u8(u & 0xFF);
      w.u8(u >> 8);
    } else {
      w.u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  w.write_to(path);
}

}  // namespace wmil
