#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "oracles.hpp"
#include "respcls/ingest.hpp"
#include "respcls/mel.hpp"
#include "respcls/rng.hpp"
#include "respcls/synth.hpp"
#include "respcls/wav.hpp"

using namespace respcls;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("respcls_ingest_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("annotation parsing maps rows to fields") {
  auto anns = parse_annotation_file("0.364 2.436 0 0\n2.436 5.0 1 1\n");
  REQUIRE(anns.size() == 2);
  CHECK(anns[0].start_s == doctest::Approx(0.364));
  CHECK(anns[0].end_s == doctest::Approx(2.436));
  CHECK(anns[0].crackle == 0);
  CHECK(anns[0].wheeze == 0);
  CHECK(anns[1].crackle == 1);
  CHECK(anns[1].wheeze == 1);
  CHECK(label3_from_annotation_bits(anns[1].crackle, anns[1].wheeze) ==
        Label3{0, 1, 1});
}

TEST_CASE("annotation parsing rejects malformed rows with a line number") {
  CHECK_THROWS_WITH_AS(parse_annotation_file("1.0 0.5 0 0\n"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse_annotation_file("0 1 0 0\nx 2 0 0\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_AS(parse_annotation_file("0 1 0\n"), ParseError);
  CHECK_THROWS_AS(parse_annotation_file("0 1 2 0\n"), ParseError);
  CHECK(parse_annotation_file("\n   \n").empty());
}

TEST_CASE("split parsing") {
  auto m = parse_split_file("101_1b1_Al_sc_Meditron\ttrain\n102_x\ttest\n");
  CHECK(m.at("101_1b1_Al_sc_Meditron") == Split::Train);
  CHECK(m.at("102_x") == Split::Test);
  CHECK_THROWS_AS(parse_split_file("a\ttrain\na\ttest\n"), ParseError);
  CHECK_THROWS_WITH_AS(parse_split_file("x\tvalid\n"),
                       doctest::Contains("unknown split tag"), ParseError);
}

TEST_CASE("patient id is the first underscore token") {
  CHECK(patient_from_recording_id("101_1b1_Al_sc_Meditron") ==
        PatientId("101"));
  CHECK(patient_from_recording_id("plain") == PatientId("plain"));
  CHECK_THROWS_AS(patient_from_recording_id(""), ParseError);
}

TEST_CASE("slice_cycles derives labels and drops out-of-range slices") {
  RecordingMeta meta;
  meta.recording_id = "p1_r";
  meta.patient = PatientId("p1");
  meta.sample_rate = 100;
  meta.split = Split::Train;
  std::vector<double> wave(200, 0.5);

  std::vector<CycleAnnotation> anns = {
      {0.0, 1.0, 1, 0},  // crackle
      {1.0, 2.0, 0, 0},  // normal
      {1.9, 2.6, 0, 1},  // runs past the end: clamped
      {2.5, 3.0, 1, 1},  // entirely past the end: dropped
  };
  SliceStats stats;
  auto cycles = slice_cycles(wave, meta, anns, &stats);
  REQUIRE(cycles.size() == 3);
  CHECK(cycles[0].label == Label3{0, 1, 0});
  CHECK(cycles[0].samples.size() == 100);
  CHECK(cycles[1].label == Label3{1, 0, 0});
  CHECK(cycles[2].label == Label3{0, 0, 1});
  CHECK(cycles[2].samples.size() == 10);  // 190..200 after clamping
  CHECK(stats.clamped == 2);
  CHECK(stats.dropped == 1);
  CHECK(cycles[2].cycle_index == 2);  // indices follow annotation rows
}

TEST_CASE("wav round-trip is exact on the PCM grid") {
  auto dir = temp_dir("wav");
  std::vector<double> samples(777);
  Rng rng(5);
  for (double& v : samples) v = quantize_pcm16(rng.uniform(-1.0, 1.0));
  write_wav_pcm16(dir / "a.wav", samples, 16000);
  WavData back = read_wav(dir / "a.wav");
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == samples.size());
  CHECK(back.samples == samples);
}

TEST_CASE("stereo wavs are averaged to mono") {
  auto dir = temp_dir("stereo");
  fs::path p = dir / "s.wav";
  {
    std::ofstream f(p, std::ios::binary);
    auto u32 = [&](std::uint32_t v) {
      f.write(reinterpret_cast<char*>(&v), 4);
    };
    auto u16 = [&](std::uint16_t v) {
      f.write(reinterpret_cast<char*>(&v), 2);
    };
    f.write("RIFF", 4);
    u32(36 + 8);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(2);  // stereo
    u32(8000);
    u32(8000 * 4);
    u16(4);
    u16(16);
    f.write("data", 4);
    u32(8);  // two frames
    u16(static_cast<std::uint16_t>(std::int16_t(32767)));
    u16(static_cast<std::uint16_t>(std::int16_t(-32767)));
    u16(static_cast<std::uint16_t>(std::int16_t(16384)));
    u16(static_cast<std::uint16_t>(std::int16_t(0)));
  }
  WavData w = read_wav(p);
  CHECK(w.source_channels == 2);
  REQUIRE(w.samples.size() == 2);
  CHECK(w.samples[0] == doctest::Approx(0.0));
  CHECK(w.samples[1] == doctest::Approx(16384.0 / 32767.0 / 2.0));
}

TEST_CASE("synthesis is deterministic under the seed") {
  SynthConfig cfg;
  cfg.n_patients = 4;
  cfg.cycles_per_patient = 3;
  cfg.seed = 7;
  Dataset a = synth_generate(cfg);
  Dataset b = synth_generate(cfg);
  REQUIRE(a.cycles.size() == b.cycles.size());
  for (std::size_t i = 0; i < a.cycles.size(); ++i) {
    CHECK(a.cycles[i].samples == b.cycles[i].samples);
    CHECK(a.cycles[i].label == b.cycles[i].label);
  }
  cfg.seed = 8;
  Dataset c = synth_generate(cfg);
  CHECK(a.cycles[0].samples != c.cycles[0].samples);
}

TEST_CASE("degenerate class mix yields only normal cycles") {
  SynthConfig cfg;
  cfg.n_patients = 3;
  cfg.cycles_per_patient = 5;
  cfg.class_mix = {1.0, 0.0, 0.0, 0.0};
  for (const auto& c : synth_generate(cfg).cycles) {
    CHECK(c.label == Label3{1, 0, 0});
  }
}

TEST_CASE("synthetic cycles respect the length and quantization contracts") {
  SynthConfig cfg;
  cfg.n_patients = 3;
  cfg.cycles_per_patient = 4;
  for (const auto& c : synth_generate(cfg).cycles) {
    CHECK(c.samples.size() >= 16000);
    CHECK(c.samples.size() <= 64000);
    CHECK(c.sample_rate == 16000);
    for (std::size_t i = 0; i < c.samples.size(); i += 997) {
      CHECK(c.samples[i] == quantize_pcm16(c.samples[i]));
    }
  }
}

TEST_CASE("synthetic split is patient-disjoint 60:40") {
  SynthConfig cfg;
  cfg.n_patients = 10;
  cfg.cycles_per_patient = 2;
  Dataset ds = synth_generate(cfg);
  std::set<std::string> train_patients, test_patients;
  for (const auto& c : ds.cycles) {
    (c.split == Split::Train ? train_patients : test_patients)
        .insert(c.patient.id);
  }
  CHECK(train_patients.size() == 6);
  CHECK(test_patients.size() == 4);
  for (const auto& p : train_patients) CHECK_FALSE(test_patients.count(p));
}

TEST_CASE("config validation names the offending field") {
  SynthConfig cfg;
  cfg.class_mix = {0.5, 0.5, 0.5, 0.0};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("class_mix"),
                       std::invalid_argument);
  cfg = SynthConfig{};
  cfg.n_patients = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("n_patients"),
                       std::invalid_argument);
}

TEST_CASE("dataset tree round-trips through the on-disk layout") {
  SynthConfig cfg;
  cfg.n_patients = 4;
  cfg.cycles_per_patient = 3;
  cfg.seed = 21;
  Dataset ds = synth_generate(cfg);
  auto dir = temp_dir("tree");
  write_icbhi_tree(ds, dir);

  Dataset back = load_dataset(dir / "audio", dir / "split.txt");
  REQUIRE(back.cycles.size() == ds.cycles.size());
  for (std::size_t i = 0; i < ds.cycles.size(); ++i) {
    const auto& a = ds.cycles[i];
    const auto& b = back.cycles[i];
    CHECK(a.samples == b.samples);  // bit-identical through 16-bit PCM
    CHECK(a.label == b.label);
    CHECK(a.patient == b.patient);
    CHECK(a.recording_id == b.recording_id);
    CHECK(a.cycle_index == b.cycle_index);
    CHECK(a.split == b.split);
  }
}

// With no patient signature a brute-force nearest-centroid classifier on mel
// means cannot identify patients above chance; with a strong signature it
// clearly can, so the patient-matching task has learnable signal.
TEST_CASE("patient signature strength controls patient identifiability") {
  auto accuracy_at = [](double strength) {
    SynthConfig cfg;
    cfg.n_patients = 10;
    cfg.cycles_per_patient = 16;
    cfg.class_mix = {0.4, 0.25, 0.25, 0.1};
    cfg.patient_signature_strength = strength;
    cfg.seed = 77;
    Dataset ds = synth_generate(cfg);

    std::map<std::string, std::vector<std::vector<double>>> by_patient;
    for (const auto& c : ds.cycles) {
      MelSpectrogram spec = mel_spectrogram(c.samples);
      std::vector<double> mean(kMelBands, 0.0);
      for (std::size_t b = 0; b < kMelBands; ++b) {
        for (std::size_t t = 0; t < spec.frames(); ++t) {
          mean[b] += spec.values.at(b, t);
        }
        mean[b] /= static_cast<double>(spec.frames());
      }
      by_patient[c.patient.id].push_back(std::move(mean));
    }

    std::map<std::string, std::vector<double>> centroid;
    for (const auto& [pid, vecs] : by_patient) {
      std::vector<double> c(kMelBands, 0.0);
      std::size_t half = vecs.size() / 2;
      for (std::size_t i = 0; i < half; ++i) {
        for (std::size_t b = 0; b < kMelBands; ++b) c[b] += vecs[i][b];
      }
      for (double& v : c) v /= static_cast<double>(half);
      centroid[pid] = std::move(c);
    }

    std::size_t correct = 0, total = 0;
    for (const auto& [pid, vecs] : by_patient) {
      for (std::size_t i = vecs.size() / 2; i < vecs.size(); ++i) {
        double best = 1e300;
        std::string best_pid;
        for (const auto& [qid, cen] : centroid) {
          double d = 0.0;
          for (std::size_t b = 0; b < kMelBands; ++b) {
            double diff = vecs[i][b] - cen[b];
            d += diff * diff;
          }
          if (d < best) {
            best = d;
            best_pid = qid;
          }
        }
        correct += best_pid == pid;
        ++total;
      }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
  };

  const double chance = 0.1;  // 10 patients
  CHECK(accuracy_at(0.0) <= 2.5 * chance);
  CHECK(accuracy_at(1.0) >= 3.0 * chance);
}

TEST_CASE("manifest lists every cycle") {
  SynthConfig cfg;
  cfg.n_patients = 2;
  cfg.cycles_per_patient = 2;
  Dataset ds = synth_generate(cfg);
  auto dir = temp_dir("manifest");
  write_manifest_csv(dir / "m.csv", ds);
  std::ifstream f(dir / "m.csv");
  std::string line;
  std::getline(f, line);
  CHECK(line ==
        "cycle_id,recording_id,patient_id,split,normal,crackle,wheeze,"
        "duration_s");
  std::size_t rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == ds.cycles.size());
}
