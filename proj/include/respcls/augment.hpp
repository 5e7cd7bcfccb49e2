#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "respcls/ingest.hpp"
#include "respcls/sampler.hpp"

namespace respcls {

// Pairing categories, by (class relation, patient relation) of the two
// constituents.
enum class PairCategory {
  SameClassIntraPatient = 0,
  SameClassCrossPatient = 1,
  CrossClassIntraPatient = 2,
  CrossClassCrossPatient = 3,
};

const char* to_string(PairCategory c);

struct PairCategoryWeights {
  double same_class_intra_patient = 0.25;
  double same_class_cross_patient = 0.25;
  double cross_class_intra_patient = 0.25;
  double cross_class_cross_patient = 0.25;

  std::array<double, 4> as_array() const {
    return {same_class_intra_patient, same_class_cross_patient,
            cross_class_intra_patient, cross_class_cross_patient};
  }
};

struct AugmentConfig {
  std::size_t target_len = 160000;  // T: 10 s at 16 kHz; must be even
  PairCategoryWeights weights;
  std::uint64_t seed = 1;

  void validate() const;
};

// Repeat padding below L (tile end-to-end, truncate), centered crop above L
// with the extra sample on the right when the overhang is odd, identity at L.
std::vector<double> pad_or_crop(std::span<const double> x, std::size_t len);

// One planned pair: the anchor is always the original cycle, the partner the
// drawn companion (equal to anchor only through the degenerate positive
// fallback).
struct PairPlan {
  std::size_t anchor = 0;
  std::size_t partner = 0;
  Label3 y_main;  // OR of the constituents
  int y_aux = 0;  // 1 iff same patient
  PairCategory category = PairCategory::SameClassIntraPatient;  // realized
  bool fell_back = false;
};

struct AugmentedSample {
  std::vector<double> waveform;  // length exactly target_len
  Label3 y_main;
  int y_aux = 0;
  std::size_t anchor = 0;
  std::size_t partner = 0;
  PairCategory category = PairCategory::SameClassIntraPatient;
  bool fell_back = false;
};

struct AugmentStats {
  std::size_t fallbacks = 0;
  SamplerStats sampler;
};

AugmentedSample concat_pair(const RespiratoryCycle& first,
                            const RespiratoryCycle& second,
                            const AugmentConfig& cfg);

// One plan per cycle, partners drawn by category weights: first a category,
// then uniform among eligible partners. An infeasible category relaxes the
// patient constraint first, then the class constraint; a dataset with a
// single cycle has no partner at all and is an error.
std::vector<PairPlan> plan_augmented_pairs(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    AugmentStats* stats = nullptr);

// Patient-matching variant: the partner draw is delegated to the sampler
// (positive_fraction of anchors get a same-patient partner, the rest a
// negative per the strategy), so one concatenated sample carries both task
// labels.
std::vector<PairPlan> plan_augmented_pairs(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    const PairSpec& pairs, AugmentStats* stats = nullptr);

AugmentedSample materialize(const PairPlan& plan,
                            const std::vector<RespiratoryCycle>& cycles,
                            const AugmentConfig& cfg);

std::vector<AugmentedSample> build_augmented_dataset(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    AugmentStats* stats = nullptr);

std::vector<AugmentedSample> build_augmented_dataset(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    const PairSpec& pairs, AugmentStats* stats = nullptr);

// Audit dump: one row per pair.
void write_augment_manifest(const std::filesystem::path& path,
                            std::span<const PairPlan> plans,
                            const std::vector<RespiratoryCycle>& cycles);

}  // namespace respcls
