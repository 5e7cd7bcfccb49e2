#include "respcls/mel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace respcls {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Iterative radix-2 FFT, in place. n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

const std::vector<double>& hann_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kWinLength);
    for (std::size_t n = 0; n < kWinLength; ++n) {
      v[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) /
                                  static_cast<double>(kWinLength));
    }
    return v;
  }();
  return w;
}

struct FilterbankData {
  Matrix weights;               // kMelBands x (kNfft/2 + 1)
  std::vector<double> centers;  // Hz
};

const FilterbankData& filterbank_data() {
  static const FilterbankData fb = [] {
    constexpr std::size_t n_bins = kNfft / 2 + 1;
    FilterbankData d;
    d.weights = Matrix(kMelBands, n_bins, 0.0);
    d.centers.resize(kMelBands);

    const double mel_lo = hz_to_mel(kFminHz);
    const double mel_hi = hz_to_mel(kFmaxHz);
    std::vector<double> edges(kMelBands + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                              static_cast<double>(kMelBands + 1);
    }
    for (std::size_t b = 0; b < kMelBands; ++b) {
      d.centers[b] = mel_to_hz(edges[b + 1]);
    }

    const double hz_per_bin =
        static_cast<double>(kTargetSampleRate) / static_cast<double>(kNfft);
    for (std::size_t k = 0; k < n_bins; ++k) {
      double mel_k = hz_to_mel(static_cast<double>(k) * hz_per_bin);
      for (std::size_t b = 0; b < kMelBands; ++b) {
        double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        if (mel_k <= lo || mel_k >= hi) continue;
        double w = mel_k <= mid ? (mel_k - lo) / (mid - lo)
                                : (hi - mel_k) / (hi - mid);
        d.weights.at(b, k) = w;
      }
    }
    return d;
  }();
  return fb;
}

}  // namespace

std::size_t mel_frame_count(std::size_t n_samples) {
  if (n_samples < kWinLength) {
    throw std::invalid_argument("input shorter than one analysis window (" +
                                std::to_string(n_samples) + " < " +
                                std::to_string(kWinLength) + " samples)");
  }
  return 1 + (n_samples - kWinLength) / kHopLength;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

const std::vector<double>& mel_band_centers_hz() {
  return filterbank_data().centers;
}

const Matrix& mel_filterbank() { return filterbank_data().weights; }

std::vector<double> resample_to_16k(std::span<const double> x, double sr_in) {
  if (sr_in <= 0.0) throw std::invalid_argument("input sample rate must be > 0");
  if (sr_in == static_cast<double>(kTargetSampleRate)) {
    return std::vector<double>(x.begin(), x.end());
  }
  const double ratio = static_cast<double>(kTargetSampleRate) / sr_in;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * ratio));
  std::vector<double> out(out_len, 0.0);
  if (x.empty()) return out;

  const double f = std::min(1.0, ratio);  // anti-alias cutoff scale
  constexpr double kHalfTaps = 32.0;
  const double half_width = kHalfTaps / f;

  for (std::size_t m = 0; m < out_len; ++m) {
    double t = static_cast<double>(m) / ratio;
    auto k_lo = static_cast<long long>(std::ceil(t - half_width));
    auto k_hi = static_cast<long long>(std::floor(t + half_width));
    k_lo = std::max<long long>(k_lo, 0);
    k_hi = std::min<long long>(k_hi, static_cast<long long>(x.size()) - 1);
    double acc = 0.0, norm = 0.0;
    for (long long k = k_lo; k <= k_hi; ++k) {
      double u = t - static_cast<double>(k);
      double su = f * u;
      double sinc = su == 0.0 ? 1.0 : std::sin(kPi * su) / (kPi * su);
      double win = 0.5 + 0.5 * std::cos(kPi * u / half_width);
      double h = f * sinc * win;
      acc += h * x[static_cast<std::size_t>(k)];
      norm += h;
    }
    out[m] = norm != 0.0 ? acc / norm * f : 0.0;
  }
  return out;
}

Matrix mel_power(std::span<const double> x) {
  if (x.size() < kWinLength) {
    throw std::invalid_argument("input shorter than one analysis window (" +
                                std::to_string(x.size()) + " samples)");
  }
  const auto& win = hann_window();
  const auto& fb = mel_filterbank();
  constexpr std::size_t n_bins = kNfft / 2 + 1;

  std::size_t n_frames = 0;
  for (std::size_t start = 0; start + kWinLength <= x.size();
       start += kHopLength) {
    ++n_frames;
  }

  Matrix out(kMelBands, n_frames, 0.0);
  std::vector<std::complex<double>> buf(kNfft);
  std::vector<double> power(n_bins);

  std::size_t frame = 0;
  for (std::size_t start = 0; start + kWinLength <= x.size();
       start += kHopLength, ++frame) {
    for (std::size_t n = 0; n < kWinLength; ++n) {
      buf[n] = std::complex<double>(x[start + n] * win[n], 0.0);
    }
    std::fill(buf.begin() + kWinLength, buf.end(), std::complex<double>(0.0));
    fft_radix2(buf);
    for (std::size_t k = 0; k < n_bins; ++k) {
      power[k] = std::norm(buf[k]);
    }
    for (std::size_t b = 0; b < kMelBands; ++b) {
      const double* w = &fb.v[b * n_bins];
      double acc = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) acc += w[k] * power[k];
      out.at(b, frame) = acc;
    }
  }
  return out;
}

MelSpectrogram mel_spectrogram(std::span<const double> x) {
  MelSpectrogram spec;
  spec.values = mel_power(x);
  for (double& v : spec.values.v) v = std::log(std::max(v, kLogFloor));
  return spec;
}

NormAccumulator::NormAccumulator()
    : sum_(kMelBands, 0.0), sumsq_(kMelBands, 0.0) {}

void NormAccumulator::add(const MelSpectrogram& spec) {
  if (spec.bands() != kMelBands) {
    throw std::invalid_argument("spectrogram band count mismatch");
  }
  for (std::size_t b = 0; b < kMelBands; ++b) {
    const double* row = &spec.values.v[b * spec.frames()];
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      s += row[t];
      s2 += row[t] * row[t];
    }
    sum_[b] += s;
    sumsq_[b] += s2;
  }
  count_ += spec.frames();
}

void NormAccumulator::merge(const NormAccumulator& other) {
  for (std::size_t b = 0; b < kMelBands; ++b) {
    sum_[b] += other.sum_[b];
    sumsq_[b] += other.sumsq_[b];
  }
  count_ += other.count_;
}

FeatureNorm NormAccumulator::finalize() const {
  if (count_ == 0) throw std::invalid_argument("no frames accumulated");
  FeatureNorm norm;
  norm.mean.resize(kMelBands);
  norm.stddev.resize(kMelBands);
  for (std::size_t b = 0; b < kMelBands; ++b) {
    double mean = sum_[b] / static_cast<double>(count_);
    double var = sumsq_[b] / static_cast<double>(count_) - mean * mean;
    norm.mean[b] = mean;
    norm.stddev[b] = std::max(std::sqrt(std::max(var, 0.0)), kNormStdFloor);
  }
  return norm;
}

FeatureNorm fit_norm(std::span<const MelSpectrogram* const> train_specs) {
  if (train_specs.empty()) {
    throw std::invalid_argument("need at least one training spectrogram");
  }
  NormAccumulator acc;
  for (const MelSpectrogram* s : train_specs) acc.add(*s);
  return acc.finalize();
}

void apply_norm(MelSpectrogram& spec, const FeatureNorm& norm) {
  if (norm.mean.size() != spec.bands() || norm.stddev.size() != spec.bands()) {
    throw std::invalid_argument("normalization band count mismatch");
  }
  for (std::size_t b = 0; b < kMelBands; ++b) {
    double m = norm.mean[b];
    double inv = 1.0 / norm.stddev[b];
    double* row = &spec.values.v[b * spec.frames()];
    for (std::size_t t = 0; t < spec.frames(); ++t) row[t] = (row[t] - m) * inv;
  }
}

static_assert(std::endian::native == std::endian::little,
              "cache format is little-endian");

void write_feature_cache(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write cache: " + path.string());
  const char magic[8] = {'R', 'S', 'C', 'F', 'E', 'A', 'T', '1'};
  f.write(magic, 8);
  auto bands = static_cast<std::uint32_t>(m.rows);
  auto frames = static_cast<std::uint32_t>(m.cols);
  f.write(reinterpret_cast<const char*>(&bands), 4);
  f.write(reinterpret_cast<const char*>(&frames), 4);
  std::vector<float> data(m.v.size());
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    data[i] = static_cast<float>(m.v[i]);
  }
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("short cache write: " + path.string());
}

Matrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open cache: " + path.string());
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "RSCFEAT1", 8) != 0) {
    throw std::runtime_error("bad cache magic: " + path.string());
  }
  std::uint32_t bands = 0, frames = 0;
  f.read(reinterpret_cast<char*>(&bands), 4);
  f.read(reinterpret_cast<char*>(&frames), 4);
  if (!f) throw std::runtime_error("truncated cache header: " + path.string());
  Matrix m(bands, frames, 0.0);
  std::vector<float> data(static_cast<std::size_t>(bands) * frames);
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("truncated cache data: " + path.string());
  for (std::size_t i = 0; i < data.size(); ++i) {
    m.v[i] = static_cast<double>(data[i]);
  }
  return m;
}

}  // namespace respcls
