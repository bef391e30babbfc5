// wav.hpp

// Copyright 2026  gestaltfuse authors

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

// WAV reader/writer for PCM 16-bit and IEEE float 32-bit, mono or stereo.
// Multi-channel input is downmixed by the per-frame channel mean. Unknown
// RIFF chunks are skipped (with the even-byte padding rule).

#ifndef GESTALTFUSE_WAV_HPP_
#define GESTALTFUSE_WAV_HPP_

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "gestaltfuse/csv.hpp"  // read_file / write_file

namespace gestaltfuse {

class MalformedWav : public Error {
 public:
  explicit MalformedWav(const std::string& reason)
      : Error("MalformedWav", reason) {}
};

class UnsupportedWav : public Error {
 public:
  explicit UnsupportedWav(const std::string& reason)
      : Error("UnsupportedWav", reason) {}
};

/// Mono audio in [-1, 1]. Invariants are enforced by make_clip and the
/// reader: non-empty samples, sample rate at least 8 kHz.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;
};

inline AudioClip make_clip(std::vector<double> samples, int sample_rate_hz) {
  if (samples.empty()) throw MalformedWav("clip has no samples");
  if (sample_rate_hz < 8000)
    throw UnsupportedWav("sample rate below 8000 Hz: " +
                         std::to_string(sample_rate_hz));
  for (double& s : samples) s = std::clamp(s, -1.0, 1.0);
  return AudioClip{std::move(samples), sample_rate_hz};
}

namespace detail {

inline std::uint32_t rd_u32(const std::string& b, size_t off) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + off, 4);
  return v;  // little-endian host assumed, as everywhere in this codebase
}

inline std::uint16_t rd_u16(const std::string& b, size_t off) {
  std::uint16_t v;
  std::memcpy(&v, b.data() + off, 2);
  return v;
}

inline void wr_u32(std::string& b, std::uint32_t v) {
  b.append(reinterpret_cast<const char*>(&v), 4);
}

inline void wr_u16(std::string& b, std::uint16_t v) {
  b.append(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace detail

inline AudioClip read_wav(const std::string& path) {
  const std::string b = read_file(path);
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw MalformedWav(path + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;

  size_t off = 12;
  while (off + 8 <= b.size()) {
    std::string id = b.substr(off, 4);
    std::uint32_t len = detail::rd_u32(b, off + 4);
    size_t body = off + 8;
    if (body + len > b.size()) throw MalformedWav(path + ": truncated chunk " + id);
    if (id == "fmt ") {
      if (len < 16) throw MalformedWav(path + ": fmt chunk too short");
      format = detail::rd_u16(b, body);
      channels = detail::rd_u16(b, body + 2);
      rate = detail::rd_u32(b, body + 4);
      bits = detail::rd_u16(b, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = len;
    }
    off = body + len + (len % 2);  // chunks are word-aligned
  }
  if (!have_fmt) throw MalformedWav(path + ": missing fmt chunk");
  if (data_len == 0) throw MalformedWav(path + ": missing or empty data chunk");
  if (channels == 0) throw MalformedWav(path + ": zero channels");

  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32)
    throw UnsupportedWav(path + ": only PCM16 and float32 are supported (format " +
                         std::to_string(format) + ", " + std::to_string(bits) +
                         " bits)");

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw MalformedWav(path + ": empty audio payload");

  std::vector<double> mono(n_frames, 0.0);
  for (size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (size_t ch = 0; ch < channels; ++ch) {
      size_t p = data_off + f * frame_bytes + ch * bytes_per_sample;
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, b.data() + p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, b.data() + p, 4);
        acc += static_cast<double>(v);
      }
    }
    mono[f] = acc / static_cast<double>(channels);
  }
  return make_clip(std::move(mono), static_cast<int>(rate));
}

enum class WavFormat { kPcm16, kFloat32 };

/// Write interleaved channels. Samples are clamped to [-1, 1].
inline void write_wav(const std::string& path,
                      const std::vector<std::vector<double>>& channels, int rate,
                      WavFormat format = WavFormat::kPcm16) {
  if (channels.empty() || channels[0].empty())
    throw MalformedWav("nothing to write");
  const size_t n = channels[0].size();
  for (const auto& ch : channels)
    if (ch.size() != n) throw MalformedWav("channel length mismatch");

  const std::uint16_t n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = (format == WavFormat::kPcm16) ? 16 : 32;
  const std::uint16_t fmt_tag = (format == WavFormat::kPcm16) ? 1 : 3;
  const std::uint32_t byte_rate = rate * n_ch * bits / 8;
  const std::uint16_t block_align = n_ch * bits / 8;
  const std::uint32_t data_len = static_cast<std::uint32_t>(n * block_align);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  detail::wr_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  detail::wr_u32(out, 16);
  detail::wr_u16(out, fmt_tag);
  detail::wr_u16(out, n_ch);
  detail::wr_u32(out, static_cast<std::uint32_t>(rate));
  detail::wr_u32(out, byte_rate);
  detail::wr_u16(out, block_align);
  detail::wr_u16(out, bits);
  out += "data";
  detail::wr_u32(out, data_len);
  for (size_t f = 0; f < n; ++f)
    for (const auto& ch : channels) {
      double v = std::clamp(ch[f], -1.0, 1.0);
      if (format == WavFormat::kPcm16) {
        long scaled = std::lrint(v * 32768.0);
        auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768l, 32767l));
        out.append(reinterpret_cast<const char*>(&q), 2);
      } else {
        float fv = static_cast<float>(v);
        out.append(reinterpret_cast<const char*>(&fv), 4);
      }
    }
  write_file(path, out);
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_WAV_HPP_
