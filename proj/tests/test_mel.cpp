#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "respcls/mel.hpp"
#include "respcls/rng.hpp"

using namespace respcls;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

std::vector<double> tone(double freq_hz, double sr, std::size_t n,
                         double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(kTau * freq_hz * static_cast<double>(i) / sr);
  }
  return x;
}

}  // namespace

TEST_CASE("frame count formula") {
  CHECK(mel_frame_count(400) == 1);
  CHECK(mel_frame_count(559) == 1);
  CHECK(mel_frame_count(560) == 2);
  CHECK(mel_frame_count(160000) == 998);
  CHECK_THROWS_AS(mel_frame_count(399), std::invalid_argument);
}

TEST_CASE("frame count matches an explicit framing loop across the range") {
  for (std::size_t n = 400; n <= 200000; n += 1) {
    // loop oracle: count windows laid down hop by hop
    std::size_t frames = 0;
    for (std::size_t start = 0; start + 400 <= n; start += 160) ++frames;
    if (frames != mel_frame_count(n)) {
      REQUIRE(frames == mel_frame_count(n));  // report the first failure only
    }
  }
  CHECK(true);
}

TEST_CASE("spectrogram dimensions follow the frame count") {
  for (std::size_t n : {400u, 401u, 7919u, 160000u}) {
    Rng rng(n);
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-0.5, 0.5);
    MelSpectrogram spec = mel_spectrogram(x);
    CHECK(spec.bands() == kMelBands);
    CHECK(spec.frames() == mel_frame_count(n));
  }
}

TEST_CASE("resampling at 16 kHz is a bit-exact identity") {
  Rng rng(3);
  std::vector<double> x(5000);
  for (double& v : x) v = rng.uniform(-1, 1);
  CHECK(resample_to_16k(x, 16000.0) == x);
}

TEST_CASE("resampled length arithmetic") {
  std::vector<double> x(44100, 0.25);
  auto y = resample_to_16k(x, 44100.0);
  CHECK(std::abs(static_cast<long long>(y.size()) - 16000LL) <= 1);
  CHECK_THROWS_AS(resample_to_16k(x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(resample_to_16k(x, -5.0), std::invalid_argument);
}

TEST_CASE("a 1 kHz tone stays at 1 kHz through resampling") {
  auto x = tone(1000.0, 44100.0, 44100);
  auto y = resample_to_16k(x, 44100.0);
  REQUIRE(y.size() >= 4096);
  // naive-DFT oracle over a 4096-sample window from the interior
  std::vector<double> win(y.begin() + 2048, y.begin() + 2048 + 4096);
  std::size_t best_bin = 0;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < 2048; ++k) {
    double m = oracle::dft_bin_magnitude(win, 4096, k);
    if (m > best_mag) {
      best_mag = m;
      best_bin = k;
    }
  }
  double peak_hz = static_cast<double>(best_bin) * 16000.0 / 4096.0;
  CHECK(std::abs(peak_hz - 1000.0) < 16000.0 / 4096.0 + 1e-9);
}

TEST_CASE("silence hits the log floor everywhere") {
  std::vector<double> x(1600, 0.0);
  MelSpectrogram spec = mel_spectrogram(x);
  const double floor_log = std::log(1e-10);
  for (double v : spec.values.v) CHECK(v == floor_log);
}

TEST_CASE("1 kHz tone peaks at the band nearest 1 kHz in every frame") {
  auto x = tone(1000.0, 16000.0, 16000);
  MelSpectrogram spec = mel_spectrogram(x);

  auto centers = oracle::band_centers_hz_128();
  std::size_t want = 0;
  for (std::size_t b = 1; b < centers.size(); ++b) {
    if (std::abs(centers[b] - 1000.0) < std::abs(centers[want] - 1000.0)) {
      want = b;
    }
  }
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    std::size_t got = 0;
    for (std::size_t b = 1; b < kMelBands; ++b) {
      if (spec.values.at(b, t) > spec.values.at(got, t)) got = b;
    }
    CHECK(got == want);
  }
}

TEST_CASE("filterbank centers follow the HTK spacing") {
  auto got = mel_band_centers_hz();
  auto want = oracle::band_centers_hz_128();
  REQUIRE(got.size() == want.size());
  for (std::size_t b = 0; b < got.size(); ++b) {
    CHECK(got[b] == doctest::Approx(want[b]).epsilon(1e-12));
  }
}

TEST_CASE("doubling the waveform quadruples pre-log power") {
  Rng rng(8);
  std::vector<double> x(4000);
  for (double& v : x) v = rng.uniform(-0.4, 0.4);
  std::vector<double> x2(x);
  for (double& v : x2) v *= 2.0;

  Matrix p1 = mel_power(x);
  Matrix p2 = mel_power(x2);
  REQUIRE(p1.v.size() == p2.v.size());
  for (std::size_t i = 0; i < p1.v.size(); ++i) {
    if (p1.v[i] < 1e-9) continue;  // below the log floor either way
    CHECK(p2.v[i] == doctest::Approx(4.0 * p1.v[i]).epsilon(1e-6));
  }
}

TEST_CASE("feature extraction is bit-deterministic") {
  Rng rng(12);
  std::vector<double> x(8000);
  for (double& v : x) v = rng.uniform(-1, 1);
  MelSpectrogram a = mel_spectrogram(x);
  MelSpectrogram b = mel_spectrogram(x);
  CHECK(a.values == b.values);
}

TEST_CASE("normalization: fit-then-apply standardizes the fit set") {
  Rng rng(4);
  std::vector<MelSpectrogram> specs(3);
  for (auto& s : specs) {
    std::vector<double> x(6000);
    for (double& v : x) v = rng.uniform(-0.8, 0.8);
    s = mel_spectrogram(x);
  }
  std::vector<const MelSpectrogram*> ptrs;
  for (auto& s : specs) ptrs.push_back(&s);
  FeatureNorm norm = fit_norm(ptrs);
  for (auto& s : specs) apply_norm(s, norm);

  for (std::size_t b = 0; b < kMelBands; ++b) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const auto& s : specs) {
      for (std::size_t t = 0; t < s.frames(); ++t) {
        sum += s.values.at(b, t);
        sumsq += s.values.at(b, t) * s.values.at(b, t);
        ++n;
      }
    }
    double mean = sum / n;
    double sd = std::sqrt(std::max(sumsq / n - mean * mean, 0.0));
    CHECK(std::abs(mean) < 1e-6);
    if (norm.stddev[b] > kNormStdFloor) {
      CHECK(std::abs(sd - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("constant bands floor the deviation and normalize to zero") {
  MelSpectrogram s;
  s.values = Matrix(kMelBands, 10, 3.25);
  std::vector<const MelSpectrogram*> ptrs = {&s};
  FeatureNorm norm = fit_norm(ptrs);
  for (std::size_t b = 0; b < kMelBands; ++b) {
    CHECK(norm.stddev[b] == kNormStdFloor);
  }
  apply_norm(s, norm);
  for (double v : s.values.v) CHECK(v == 0.0);
}

TEST_CASE("normalization accumulates merges in sample order") {
  Rng rng(9);
  std::vector<MelSpectrogram> specs(4);
  for (auto& s : specs) {
    std::vector<double> x(3000);
    for (double& v : x) v = rng.uniform(-0.5, 0.5);
    s = mel_spectrogram(x);
  }
  std::vector<const MelSpectrogram*> ptrs;
  for (auto& s : specs) ptrs.push_back(&s);
  FeatureNorm direct = fit_norm(ptrs);

  std::vector<NormAccumulator> partials(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) partials[i].add(specs[i]);
  NormAccumulator total;
  for (const auto& p : partials) total.merge(p);
  FeatureNorm merged = total.finalize();
  CHECK(direct.mean == merged.mean);
  CHECK(direct.stddev == merged.stddev);
}

TEST_CASE("feature cache round-trips at float32 precision") {
  namespace fs = std::filesystem;
  Rng rng(2);
  Matrix m(kMelBands, 33, 0.0);
  for (double& v : m.v) v = static_cast<float>(rng.uniform(-20, 5));
  fs::path p = fs::temp_directory_path() / "respcls_cache_test.bin";
  write_feature_cache(p, m);
  Matrix back = read_feature_cache(p);
  CHECK(back == m);
  fs::remove(p);
}
