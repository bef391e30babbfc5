// audio_dsp.hpp

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

// Three-channel MFCC feature images from raw audio:
//   c0 = MFCC (Hann window -> |DFT|^2 -> HTK-mel triangular filterbank ->
//        log with floor -> orthonormal DCT-II, first n_mfcc rows)
//   c1 = delta(c0), c2 = delta(c1)
// each channel independently min-max normalized to [0, 1] per clip
// (constant channels map to 0.5).

#ifndef GESTALTFUSE_AUDIO_DSP_HPP_
#define GESTALTFUSE_AUDIO_DSP_HPP_

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "gestaltfuse/wav.hpp"

namespace gestaltfuse {

class ClipTooShort : public Error {
 public:
  ClipTooShort(size_t have, size_t need)
      : Error("ClipTooShort", std::to_string(have) + " samples, need at least " +
                                  std::to_string(need)) {}
};

struct DspConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 40;
  int n_mfcc = 13;
  double fmin_hz = 20.0;
  double fmax_hz = 8000.0;  // effective ceiling is min(fmax_hz, rate / 2)
  double log_floor = 1e-10;
  int delta_window = 2;

  size_t frame_length(int rate) const {
    return static_cast<size_t>(std::llround(frame_ms * rate / 1000.0));
  }
  size_t hop_length(int rate) const {
    return static_cast<size_t>(std::llround(hop_ms * rate / 1000.0));
  }
  size_t dft_size(int rate) const {
    size_t n = 1;
    while (n < frame_length(rate)) n <<= 1;
    return n;
  }

  void validate(int rate) const {
    if (frame_ms <= hop_ms || hop_ms <= 0)
      throw Error("ConfigInvalid", "need frame_ms > hop_ms > 0");
    if (n_mfcc < 1 || n_mfcc > n_mels)
      throw Error("ConfigInvalid", "need 1 <= n_mfcc <= n_mels");
    double fmax = std::min(fmax_hz, rate / 2.0);
    if (fmin_hz <= 0 || fmin_hz >= fmax)
      throw Error("ConfigInvalid", "need 0 < fmin_hz < fmax_hz <= rate/2");
    if (log_floor <= 0) throw Error("ConfigInvalid", "log_floor must be positive");
    if (delta_window < 1) throw Error("ConfigInvalid", "delta_window must be >= 1");
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

/// Center frequencies (Hz) of the n_mels triangular filters.
inline std::vector<double> mel_filter_centers_hz(const DspConfig& cfg, int rate) {
  double fmax = std::min(cfg.fmax_hz, rate / 2.0);
  double lo = hz_to_mel(cfg.fmin_hz), hi = hz_to_mel(fmax);
  std::vector<double> centers(cfg.n_mels);
  for (int i = 0; i < cfg.n_mels; ++i)
    centers[i] = mel_to_hz(lo + (hi - lo) * (i + 1) / (cfg.n_mels + 1));
  return centers;
}

/// Triangular filterbank on DFT bin frequencies, peak weight 1 at each
/// center (HTK-style, no area normalization). Shape: n_mels x (nfft/2 + 1).
inline Eigen::MatrixXd mel_filterbank(const DspConfig& cfg, int rate) {
  const size_t nfft = cfg.dft_size(rate);
  const size_t n_bins = nfft / 2 + 1;
  double fmax = std::min(cfg.fmax_hz, rate / 2.0);
  double lo = hz_to_mel(cfg.fmin_hz), hi = hz_to_mel(fmax);
  std::vector<double> edge(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edge[i] = mel_to_hz(lo + (hi - lo) * i / (cfg.n_mels + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, n_bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    double left = edge[m], center = edge[m + 1], right = edge[m + 2];
    for (size_t k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * rate / static_cast<double>(nfft);
      double w = 0.0;
      if (f > left && f < right)
        w = (f <= center) ? (f - left) / (center - left)
                          : (right - f) / (right - center);
      fb(m, k) = w;
    }
  }
  return fb;
}

namespace detail {

inline std::vector<double> hann_window(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

}  // namespace detail

/// Number of analysis frames: 1 + floor((len - frame) / hop).
inline size_t frame_count(size_t len, size_t frame_len, size_t hop_len) {
  return 1 + (len - frame_len) / hop_len;
}

/// Mel filterbank energies (before the log), n_mels x n_frames.
inline Eigen::MatrixXd mel_spectrogram(const AudioClip& clip, const DspConfig& cfg) {
  cfg.validate(clip.sample_rate_hz);
  const int rate = clip.sample_rate_hz;
  const size_t frame_len = cfg.frame_length(rate);
  const size_t hop_len = cfg.hop_length(rate);
  if (clip.samples.size() < frame_len)
    throw ClipTooShort(clip.samples.size(), frame_len);
  const size_t nfft = cfg.dft_size(rate);
  const size_t n_bins = nfft / 2 + 1;
  const size_t n_frames = frame_count(clip.samples.size(), frame_len, hop_len);

  const auto window = detail::hann_window(frame_len);
  const Eigen::MatrixXd fb = mel_filterbank(cfg, rate);

  Eigen::FFT<double> fft;
  std::vector<double> buf(nfft, 0.0);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd power(n_bins);
  Eigen::MatrixXd mel(cfg.n_mels, n_frames);
  for (size_t f = 0; f < n_frames; ++f) {
    const double* src = clip.samples.data() + f * hop_len;
    for (size_t i = 0; i < frame_len; ++i) buf[i] = src[i] * window[i];
    std::fill(buf.begin() + frame_len, buf.end(), 0.0);
    fft.fwd(spec, buf);
    for (size_t k = 0; k < n_bins; ++k) power(k) = std::norm(spec[k]);
    mel.col(f) = fb * power;
  }
  return mel;
}

/// Orthonormal DCT-II basis, n_out x n_in.
inline Eigen::MatrixXd dct_matrix(int n_out, int n_in) {
  Eigen::MatrixXd d(n_out, n_in);
  const double scale = std::sqrt(2.0 / n_in);
  for (int i = 0; i < n_out; ++i)
    for (int j = 0; j < n_in; ++j)
      d(i, j) = scale * std::cos(M_PI * i * (2 * j + 1) / (2.0 * n_in));
  d.row(0) *= 1.0 / std::sqrt(2.0);
  return d;
}

/// MFCC matrix, n_mfcc x n_frames.
inline Eigen::MatrixXd mfcc(const AudioClip& clip, const DspConfig& cfg) {
  Eigen::MatrixXd mel = mel_spectrogram(clip, cfg);
  for (Eigen::Index i = 0; i < mel.size(); ++i)
    mel(i) = std::log(std::max(mel(i), cfg.log_floor));
  return dct_matrix(cfg.n_mfcc, cfg.n_mels) * mel;
}

/// Regression delta with edge replication:
///   d_t = sum_{n=1..N} n (c_{t+n} - c_{t-n}) / (2 sum n^2)
inline Eigen::MatrixXd delta(const Eigen::MatrixXd& coeffs, int window) {
  if (coeffs.size() == 0) throw Error("ConfigInvalid", "empty coefficient matrix");
  if (window < 1) throw Error("ConfigInvalid", "delta window must be >= 1");
  const Eigen::Index t_max = coeffs.cols() - 1;
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;
  Eigen::MatrixXd out(coeffs.rows(), coeffs.cols());
  for (Eigen::Index t = 0; t <= t_max; ++t) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(coeffs.rows());
    for (int n = 1; n <= window; ++n) {
      Eigen::Index fwd = std::min(t + n, t_max);
      Eigen::Index back = std::max<Eigen::Index>(t - n, 0);
      acc += static_cast<double>(n) * (coeffs.col(fwd) - coeffs.col(back));
    }
    out.col(t) = acc / denom;
  }
  return out;
}

/// Affine parameters used by the [0,1] normalization of one coefficient row.
struct RowNorm {
  double min = 0.0;
  double max = 0.0;  // max == min marks a constant row (mapped to 0.5)
};

/// Normalization is min-max per coefficient row within each channel:
/// coefficient 0 carries the energy scale and would otherwise swamp the
/// higher coefficients, and a silent clip keeps every row constant, which
/// maps the whole channel to 0.5.
struct FeatureImage {
  std::array<Eigen::MatrixXd, 3> channels;  // c0 = MFCC, c1 = delta, c2 = delta-delta
  std::array<std::vector<RowNorm>, 3> normalization;  // one entry per row
};

inline void minmax_normalize_rows(Eigen::MatrixXd& m, std::vector<RowNorm>& norms) {
  norms.resize(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto& n = norms[r];
    n.min = m.row(r).minCoeff();
    n.max = m.row(r).maxCoeff();
    if (n.max > n.min)
      m.row(r) = (m.row(r).array() - n.min) / (n.max - n.min);
    else
      m.row(r).setConstant(0.5);
  }
}

inline FeatureImage feature_image(const AudioClip& clip, const DspConfig& cfg) {
  FeatureImage img;
  img.channels[0] = mfcc(clip, cfg);
  img.channels[1] = delta(img.channels[0], cfg.delta_window);
  img.channels[2] = delta(img.channels[1], cfg.delta_window);
  for (int c = 0; c < 3; ++c)
    minmax_normalize_rows(img.channels[c], img.normalization[c]);
  return img;
}

/// Root-mean-square amplitude of the raw clip.
inline double rms(const AudioClip& clip) {
  double acc = 0.0;
  for (double s : clip.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(clip.samples.size()));
}

// ---- npy export ------------------------------------------------------------------
// NumPy .npy v1.0, little-endian float32, C order. One file per channel plus
// a JSON sidecar (written by the pipeline) keeps the features portable.

inline void write_npy_f32(const std::string& path, const Eigen::MatrixXd& m) {
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(m.rows()) + ", " + std::to_string(m.cols()) +
                       "), }";
  size_t unpadded = 10 + header.size() + 1;
  size_t padded = (unpadded + 63) / 64 * 64;
  header.append(padded - unpadded, ' ');
  header += '\n';

  std::string out;
  out.reserve(padded + 4 * static_cast<size_t>(m.size()));
  out += '\x93';
  out += "NUMPY";
  out += '\x01';
  out += '\x00';
  std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
  out.append(reinterpret_cast<const char*>(&hlen), 2);
  out += header;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float v = static_cast<float>(m(r, c));
      out.append(reinterpret_cast<const char*>(&v), 4);
    }
  write_file(path, out);
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_AUDIO_DSP_HPP_
