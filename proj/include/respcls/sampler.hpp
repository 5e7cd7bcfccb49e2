#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "respcls/ingest.hpp"
#include "respcls/rng.hpp"

namespace respcls {

enum class PairStrategy { Base, Hard };

const char* to_string(PairStrategy s);

struct PairSpec {
  PairStrategy strategy = PairStrategy::Hard;
  double positive_fraction = 0.5;  // expected share of same-patient pairs
  std::uint64_t seed = 1;

  void validate() const;
};

struct SamplerStats {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t self_pairs = 0;      // positive draws with a 1-cycle patient
  std::size_t hard_fallbacks = 0;  // hard draws that had to relax the label
};

// Partner-eligibility pools over one cycle collection. All pools exclude the
// anchor itself.
class CycleIndex {
 public:
  explicit CycleIndex(const std::vector<RespiratoryCycle>& cycles);

  std::size_t n_cycles() const { return n_; }
  std::size_t n_patients() const { return by_patient_.size(); }

  // Same patient as the anchor.
  std::vector<std::size_t> positive_pool(std::size_t anchor) const;
  // Any other patient; optionally restricted to the anchor's exact Label3.
  std::vector<std::size_t> negative_pool(std::size_t anchor,
                                         bool same_label) const;
  // Arbitrary (same_class, same_patient) combination.
  std::vector<std::size_t> pool(std::size_t anchor, bool same_class,
                                bool same_patient) const;
  // Class relation only, any patient.
  std::vector<std::size_t> class_pool(std::size_t anchor,
                                      bool same_class) const;
  // Every cycle but the anchor.
  std::vector<std::size_t> any_pool(std::size_t anchor) const;

  // Uniform same-patient partner; falls back to the anchor itself (logged)
  // when the patient has a single cycle.
  std::size_t sample_positive(std::size_t anchor, Rng& rng,
                              SamplerStats* stats = nullptr) const;

  // Base: uniform over cycles of any other patient. Hard: restricted to
  // other-patient cycles with the anchor's Label3, falling back to base (and
  // counting the fallback) when none exists. Requires >= 2 patients.
  std::size_t sample_negative(std::size_t anchor, PairStrategy strategy,
                              Rng& rng, SamplerStats* stats = nullptr) const;

 private:
  const std::vector<RespiratoryCycle>* cycles_;
  std::size_t n_;
  std::map<PatientId, std::vector<std::size_t>> by_patient_;
};

}  // namespace respcls
