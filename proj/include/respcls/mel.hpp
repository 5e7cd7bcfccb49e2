#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "respcls/matrix.hpp"

namespace respcls {

// Feature pipeline constants. The window/hop pair gives 25 ms / 10 ms at
// 16 kHz; frames are taken without center padding, magnitudes are squared
// before the mel projection, filters use the HTK mel scale with unit peak,
// and the log floor is 1e-10. These values are pinned so features are
// bit-reproducible; the cache format below depends on them.
inline constexpr int kTargetSampleRate = 16000;
inline constexpr std::size_t kMelBands = 128;
inline constexpr std::size_t kWinLength = 400;
inline constexpr std::size_t kHopLength = 160;
inline constexpr std::size_t kNfft = 512;
inline constexpr double kFminHz = 0.0;
inline constexpr double kFmaxHz = 8000.0;
inline constexpr double kLogFloor = 1e-10;

struct MelSpectrogram {
  Matrix values;  // kMelBands x frames, log power
  static constexpr int sample_rate = kTargetSampleRate;
  static constexpr std::size_t window = kWinLength;
  static constexpr std::size_t hop = kHopLength;

  std::size_t bands() const { return values.rows; }
  std::size_t frames() const { return values.cols; }
};

// 1 + floor((n - 400) / 160); throws for n < 400.
std::size_t mel_frame_count(std::size_t n_samples);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequency (Hz) of each of the 128 bands.
const std::vector<double>& mel_band_centers_hz();

// Triangular filter weights, kMelBands x (kNfft/2 + 1). With 128 bands over
// 0-8 kHz and a 512-point FFT the narrowest low-frequency triangles span
// less than one bin, so a few rows are all-zero; those bands sit at the log
// floor for every input.
const Matrix& mel_filterbank();

// Windowed-sinc resampling to 16 kHz. Identity (bit-exact copy) when the
// input is already at 16 kHz. Output length is round(n * 16000 / sr_in).
std::vector<double> resample_to_16k(std::span<const double> x, double sr_in);

// Pre-log mel power, kMelBands x F. Throws if the input is shorter than one
// window.
Matrix mel_power(std::span<const double> x);

// log(max(power, 1e-10))
MelSpectrogram mel_spectrogram(std::span<const double> x);

// Per-band standardization statistics fit on the training split only.
struct FeatureNorm {
  std::vector<double> mean;    // kMelBands
  std::vector<double> stddev;  // kMelBands, floored at 1e-5
};

inline constexpr double kNormStdFloor = 1e-5;

class NormAccumulator {
 public:
  NormAccumulator();
  void add(const MelSpectrogram& spec);
  // Merge a partial accumulated elsewhere (used for deterministic parallel
  // fits: partials are reduced in sample order).
  void merge(const NormAccumulator& other);
  FeatureNorm finalize() const;

 private:
  std::vector<double> sum_;
  std::vector<double> sumsq_;
  std::size_t count_ = 0;
};

FeatureNorm fit_norm(std::span<const MelSpectrogram* const> train_specs);
void apply_norm(MelSpectrogram& spec, const FeatureNorm& norm);

// Feature cache: 16-byte header (8-byte magic "RSCFEAT1", u32 bands,
// u32 frames, little-endian) followed by bands*frames float32 values,
// row-major.
void write_feature_cache(const std::filesystem::path& path, const Matrix& m);
Matrix read_feature_cache(const std::filesystem::path& path);

}  // namespace respcls
