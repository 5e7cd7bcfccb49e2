#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "respcls/ingest.hpp"

namespace respcls {

// Desk-scale synthetic dataset with planted pathology and patient
// signatures. Class recipes at 16 kHz: normal is band-limited noise, crackle
// adds a train of short damped clicks, wheeze adds a sustained 200-800 Hz
// tone, both adds both overlays. Every cycle of a patient passes through
// that patient's fixed spectral-tilt filter, scaled by
// patient_signature_strength (0 = identity filter). snr_db sets overlay
// energy relative to the noise floor and is the difficulty knob.
struct SynthConfig {
  int n_patients = 40;
  int cycles_per_patient = 12;
  // P(normal), P(crackle), P(wheeze), P(both); must sum to 1.
  std::array<double, 4> class_mix = {0.4, 0.25, 0.25, 0.1};
  double patient_signature_strength = 0.3;
  double snr_db = 10.0;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument naming the field
};

// The first 60% of patients (rounded) form the train split; the rest test.
// Patient-disjoint by construction. Samples are pre-quantized to the 16-bit
// PCM grid so the on-disk tree round-trips bit-exactly.
Dataset synth_generate(const SynthConfig& cfg);

// ICBHI-style tree: <out>/audio/<rid>.wav + <rid>.txt, <out>/split.txt,
// <out>/manifest.csv. Each patient's cycles are written back-to-back as one
// recording with per-cycle annotation rows.
void write_icbhi_tree(const Dataset& dataset,
                      const std::filesystem::path& out_dir);

}  // namespace respcls
