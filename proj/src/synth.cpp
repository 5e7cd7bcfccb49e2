#include "respcls/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "respcls/mel.hpp"
#include "respcls/rng.hpp"
#include "respcls/wav.hpp"

namespace respcls {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr int kMinCycleSamples = 1 * kTargetSampleRate;
constexpr int kMaxCycleSamples = 4 * kTargetSampleRate;
constexpr double kNoiseSigma = 0.05;

std::vector<double> band_limited_noise(std::size_t n, Rng& rng) {
  std::vector<double> white(n + 2);
  for (double& v : white) v = kNoiseSigma * rng.normal();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (white[i] + white[i + 1] + white[i + 2]) / 3.0;
  }
  return out;
}

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

void add_wheeze_tone(std::vector<double>& x, double amplitude, Rng& rng) {
  const double freq = rng.uniform(200.0, 800.0);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const double w = 2.0 * kPi * freq / kTargetSampleRate;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += amplitude * std::sin(w * static_cast<double>(i) + phase);
  }
}

void add_crackle_clicks(std::vector<double>& x, double peak, Rng& rng) {
  const double dur_s = static_cast<double>(x.size()) / kTargetSampleRate;
  const double rate = rng.uniform(6.0, 14.0);  // clicks per second
  const auto n_clicks =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate * dur_s)));
  constexpr std::size_t kClickLen = 32;  // 2 ms damped burst
  for (std::size_t c = 0; c < n_clicks; ++c) {
    auto pos = static_cast<std::size_t>(rng.uniform_index(x.size()));
    const double fc = rng.uniform(1500.0, 4000.0);
    const double w = 2.0 * kPi * fc / kTargetSampleRate;
    const double decay = rng.uniform(0.10, 0.25);
    for (std::size_t k = 0; k < kClickLen && pos + k < x.size(); ++k) {
      x[pos + k] +=
          peak * std::exp(-decay * static_cast<double>(k)) * std::cos(w * k);
    }
  }
}

// First-order tilt y[n] = (x[n] - t*x[n-1]) / sqrt(1 + t^2). Exact identity
// at t = 0.
void apply_tilt(std::vector<double>& x, double tilt) {
  if (tilt == 0.0) return;
  const double norm = std::sqrt(1.0 + tilt * tilt);
  double prev = 0.0;
  for (double& v : x) {
    double cur = v;
    v = (cur - tilt * prev) / norm;
    prev = cur;
  }
}

std::string patient_token(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%04d", index + 1);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_patients < 1) throw std::invalid_argument("synth.n_patients must be >= 1");
  if (cycles_per_patient < 1) {
    throw std::invalid_argument("synth.cycles_per_patient must be >= 1");
  }
  double sum = 0.0;
  for (double p : class_mix) {
    if (p < 0.0) throw std::invalid_argument("synth.class_mix entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("synth.class_mix must sum to 1");
  }
  if (patient_signature_strength < 0.0) {
    throw std::invalid_argument("synth.patient_signature_strength must be >= 0");
  }
}

Dataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  const int n_train_patients =
      static_cast<int>(std::llround(0.6 * cfg.n_patients));

  for (int p = 0; p < cfg.n_patients; ++p) {
    Rng patient_rng(derive_seed(cfg.seed, "patient-" + std::to_string(p)));
    const double tilt =
        cfg.patient_signature_strength * patient_rng.uniform(-1.0, 1.0);

    RecordingMeta meta;
    meta.patient = PatientId(patient_token(p));
    meta.recording_id = meta.patient.id + "_r1_synth";
    meta.sample_rate = kTargetSampleRate;
    meta.split = p < n_train_patients ? Split::Train : Split::Test;
    ds.recordings.push_back(meta);

    for (int k = 0; k < cfg.cycles_per_patient; ++k) {
      Rng rng(derive_seed(cfg.seed, "cycle-" + std::to_string(p) + "-" +
                                        std::to_string(k)));
      auto cls = static_cast<IcbhiClass>(rng.categorical(cfg.class_mix));
      const auto n = static_cast<std::size_t>(
          kMinCycleSamples +
          rng.uniform_index(kMaxCycleSamples - kMinCycleSamples + 1));

      std::vector<double> x = band_limited_noise(n, rng);
      const double noise_rms = rms(x);
      const double gain = std::pow(10.0, cfg.snr_db / 20.0);
      const double tone_amp = noise_rms * gain * std::sqrt(2.0);
      const double click_peak = noise_rms * gain * 4.0;

      if (cls == IcbhiClass::Crackle || cls == IcbhiClass::Both) {
        add_crackle_clicks(x, click_peak, rng);
      }
      if (cls == IcbhiClass::Wheeze || cls == IcbhiClass::Both) {
        add_wheeze_tone(x, tone_amp, rng);
      }
      apply_tilt(x, tilt);

      double peak = 0.0;
      for (double v : x) peak = std::max(peak, std::abs(v));
      if (peak > 0.9) {
        const double scale = 0.9 / peak;
        for (double& v : x) v *= scale;
      }
      for (double& v : x) v = quantize_pcm16(v);

      RespiratoryCycle c;
      c.samples = std::move(x);
      c.sample_rate = kTargetSampleRate;
      c.label = label3_from_class(cls);
      c.patient = meta.patient;
      c.recording_id = meta.recording_id;
      c.cycle_index = k;
      c.split = meta.split;
      ds.cycles.push_back(std::move(c));
    }
  }
  return ds;
}

void write_icbhi_tree(const Dataset& dataset,
                      const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "audio");

  std::ofstream split_out(out_dir / "split.txt");
  if (!split_out) {
    throw std::runtime_error("cannot write split file under " +
                             out_dir.string());
  }
  for (const auto& meta : dataset.recordings) {
    split_out << meta.recording_id << '\t' << to_string(meta.split) << '\n';
  }

  for (const auto& meta : dataset.recordings) {
    std::vector<double> audio;
    std::string ann;
    std::size_t offset = 0;
    for (const auto& c : dataset.cycles) {
      if (c.recording_id != meta.recording_id) continue;
      double start = static_cast<double>(offset) / kTargetSampleRate;
      double end = static_cast<double>(offset + c.samples.size()) /
                   kTargetSampleRate;
      char row[96];
      std::snprintf(row, sizeof(row), "%.6f %.6f %d %d\n", start, end,
                    c.label.crackle ? 1 : 0, c.label.wheeze ? 1 : 0);
      ann += row;
      audio.insert(audio.end(), c.samples.begin(), c.samples.end());
      offset += c.samples.size();
    }
    write_wav_pcm16(out_dir / "audio" / (meta.recording_id + ".wav"), audio,
                    kTargetSampleRate);
    std::ofstream tf(out_dir / "audio" / (meta.recording_id + ".txt"));
    if (!tf) {
      throw std::runtime_error("cannot write annotations for " +
                               meta.recording_id);
    }
    tf << ann;
  }

  write_manifest_csv(out_dir / "manifest.csv", dataset);
}

}  // namespace respcls
