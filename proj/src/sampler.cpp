#include "respcls/sampler.hpp"

#include <stdexcept>

#include "respcls/log.hpp"

namespace respcls {

const char* to_string(PairStrategy s) {
  return s == PairStrategy::Base ? "base" : "hard";
}

void PairSpec::validate() const {
  if (positive_fraction < 0.0 || positive_fraction > 1.0) {
    throw std::invalid_argument("sampler.positive_fraction must be in [0,1]");
  }
}

CycleIndex::CycleIndex(const std::vector<RespiratoryCycle>& cycles)
    : cycles_(&cycles), n_(cycles.size()) {
  for (std::size_t i = 0; i < n_; ++i) {
    by_patient_[cycles[i].patient].push_back(i);
  }
}

std::vector<std::size_t> CycleIndex::positive_pool(std::size_t anchor) const {
  std::vector<std::size_t> out;
  for (std::size_t j : by_patient_.at((*cycles_)[anchor].patient)) {
    if (j != anchor) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> CycleIndex::negative_pool(std::size_t anchor,
                                                   bool same_label) const {
  const auto& a = (*cycles_)[anchor];
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j) {
    const auto& c = (*cycles_)[j];
    if (c.patient == a.patient) continue;
    if (same_label && !(c.label == a.label)) continue;
    out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> CycleIndex::pool(std::size_t anchor, bool same_class,
                                          bool same_patient) const {
  const auto& a = (*cycles_)[anchor];
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j) {
    if (j == anchor) continue;
    const auto& c = (*cycles_)[j];
    if ((c.label == a.label) != same_class) continue;
    if ((c.patient == a.patient) != same_patient) continue;
    out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> CycleIndex::class_pool(std::size_t anchor,
                                                bool same_class) const {
  const auto& a = (*cycles_)[anchor];
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j) {
    if (j == anchor) continue;
    if (((*cycles_)[j].label == a.label) != same_class) continue;
    out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> CycleIndex::any_pool(std::size_t anchor) const {
  std::vector<std::size_t> out;
  out.reserve(n_ - 1);
  for (std::size_t j = 0; j < n_; ++j) {
    if (j != anchor) out.push_back(j);
  }
  return out;
}

std::size_t CycleIndex::sample_positive(std::size_t anchor, Rng& rng,
                                        SamplerStats* stats) const {
  if (stats) ++stats->positives;
  auto pool = positive_pool(anchor);
  if (pool.empty()) {
    if (stats) ++stats->self_pairs;
    log_warn("patient " + (*cycles_)[anchor].patient.id +
             " has a single cycle; pairing it with itself");
    return anchor;
  }
  return pool[rng.uniform_index(pool.size())];
}

std::size_t CycleIndex::sample_negative(std::size_t anchor,
                                        PairStrategy strategy, Rng& rng,
                                        SamplerStats* stats) const {
  if (n_patients() < 2) {
    throw std::invalid_argument(
        "negative pairs need at least two patients in the dataset");
  }
  if (stats) ++stats->negatives;
  if (strategy == PairStrategy::Hard) {
    auto pool = negative_pool(anchor, /*same_label=*/true);
    if (!pool.empty()) return pool[rng.uniform_index(pool.size())];
    if (stats) ++stats->hard_fallbacks;
    log_debug("no other patient shares label with anchor " +
              (*cycles_)[anchor].cycle_id() + "; falling back to base");
  }
  auto pool = negative_pool(anchor, /*same_label=*/false);
  return pool[rng.uniform_index(pool.size())];
}

}  // namespace respcls
