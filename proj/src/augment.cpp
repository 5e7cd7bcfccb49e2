#include "respcls/augment.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace respcls {

namespace {

PairCategory realized_category(const RespiratoryCycle& a,
                               const RespiratoryCycle& b) {
  const bool same_class = a.label == b.label;
  const bool same_patient = a.patient == b.patient;
  if (same_class) {
    return same_patient ? PairCategory::SameClassIntraPatient
                        : PairCategory::SameClassCrossPatient;
  }
  return same_patient ? PairCategory::CrossClassIntraPatient
                      : PairCategory::CrossClassCrossPatient;
}

PairPlan make_plan(const std::vector<RespiratoryCycle>& cycles,
                   std::size_t anchor, std::size_t partner, bool fell_back) {
  PairPlan p;
  p.anchor = anchor;
  p.partner = partner;
  p.y_main = label3_or(cycles[anchor].label, cycles[partner].label);
  p.y_aux = cycles[anchor].patient == cycles[partner].patient ? 1 : 0;
  p.category = realized_category(cycles[anchor], cycles[partner]);
  p.fell_back = fell_back;
  return p;
}

}  // namespace

const char* to_string(PairCategory c) {
  switch (c) {
    case PairCategory::SameClassIntraPatient:
      return "same_class_intra_patient";
    case PairCategory::SameClassCrossPatient:
      return "same_class_cross_patient";
    case PairCategory::CrossClassIntraPatient:
      return "cross_class_intra_patient";
    case PairCategory::CrossClassCrossPatient:
      return "cross_class_cross_patient";
  }
  return "?";
}

void AugmentConfig::validate() const {
  if (target_len == 0 || target_len % 2 != 0) {
    throw std::invalid_argument("augment.target_len_samples must be even and > 0");
  }
  auto w = weights.as_array();
  double sum = 0.0;
  for (double v : w) {
    if (v < 0.0) {
      throw std::invalid_argument("augment.pair_weights entries must be >= 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("augment.pair_weights must sum to 1");
  }
}

std::vector<double> pad_or_crop(std::span<const double> x, std::size_t len) {
  if (x.empty()) throw std::invalid_argument("pad_or_crop: empty waveform");
  if (len == 0) throw std::invalid_argument("pad_or_crop: zero target length");
  std::vector<double> out(len);
  if (x.size() >= len) {
    std::size_t offset = (x.size() - len) / 2;
    for (std::size_t i = 0; i < len; ++i) out[i] = x[offset + i];
  } else {
    for (std::size_t i = 0; i < len; ++i) out[i] = x[i % x.size()];
  }
  return out;
}

AugmentedSample concat_pair(const RespiratoryCycle& first,
                            const RespiratoryCycle& second,
                            const AugmentConfig& cfg) {
  cfg.validate();
  if (first.sample_rate != second.sample_rate) {
    throw std::invalid_argument(
        "sample-rate mismatch between cycles: " +
        std::to_string(first.sample_rate) + " vs " +
        std::to_string(second.sample_rate));
  }
  const std::size_t half = cfg.target_len / 2;
  AugmentedSample s;
  s.waveform = pad_or_crop(first.samples, half);
  auto tail = pad_or_crop(second.samples, half);
  s.waveform.insert(s.waveform.end(), tail.begin(), tail.end());
  s.y_main = label3_or(first.label, second.label);
  s.y_aux = first.patient == second.patient ? 1 : 0;
  s.category = realized_category(first, second);
  return s;
}

std::vector<PairPlan> plan_augmented_pairs(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    AugmentStats* stats) {
  cfg.validate();
  if (cycles.size() < 2) {
    throw std::invalid_argument(
        "concatenation needs at least two cycles, got " +
        std::to_string(cycles.size()));
  }
  CycleIndex index(cycles);
  Rng rng(cfg.seed);
  const auto weights = cfg.weights.as_array();

  std::vector<PairPlan> plans;
  plans.reserve(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    auto cat = static_cast<PairCategory>(rng.categorical(weights));
    const bool same_class = cat == PairCategory::SameClassIntraPatient ||
                            cat == PairCategory::SameClassCrossPatient;
    const bool same_patient = cat == PairCategory::SameClassIntraPatient ||
                              cat == PairCategory::CrossClassIntraPatient;
    bool fell_back = false;
    auto pool = index.pool(i, same_class, same_patient);
    if (pool.empty()) {
      // Relax the patient constraint first, then the class constraint.
      fell_back = true;
      if (stats) ++stats->fallbacks;
      pool = index.class_pool(i, same_class);
      if (pool.empty()) pool = index.any_pool(i);
    }
    std::size_t partner = pool[rng.uniform_index(pool.size())];
    plans.push_back(make_plan(cycles, i, partner, fell_back));
  }
  return plans;
}

std::vector<PairPlan> plan_augmented_pairs(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    const PairSpec& pairs, AugmentStats* stats) {
  cfg.validate();
  pairs.validate();
  if (cycles.size() < 2) {
    throw std::invalid_argument(
        "concatenation needs at least two cycles, got " +
        std::to_string(cycles.size()));
  }
  CycleIndex index(cycles);
  if (pairs.positive_fraction < 1.0 && index.n_patients() < 2) {
    throw std::invalid_argument(
        "negative pairs need at least two patients in the dataset");
  }
  Rng rng(pairs.seed);
  SamplerStats local;
  SamplerStats* sstats = stats ? &stats->sampler : &local;

  std::vector<PairPlan> plans;
  plans.reserve(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    std::size_t partner;
    if (rng.bernoulli(pairs.positive_fraction)) {
      partner = index.sample_positive(i, rng, sstats);
    } else {
      partner = index.sample_negative(i, pairs.strategy, rng, sstats);
    }
    plans.push_back(make_plan(cycles, i, partner, false));
  }
  return plans;
}

AugmentedSample materialize(const PairPlan& plan,
                            const std::vector<RespiratoryCycle>& cycles,
                            const AugmentConfig& cfg) {
  AugmentedSample s = concat_pair(cycles[plan.anchor], cycles[plan.partner], cfg);
  s.anchor = plan.anchor;
  s.partner = plan.partner;
  s.fell_back = plan.fell_back;
  return s;
}

std::vector<AugmentedSample> build_augmented_dataset(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    AugmentStats* stats) {
  auto plans = plan_augmented_pairs(cycles, cfg, stats);
  std::vector<AugmentedSample> out;
  out.reserve(plans.size());
  for (const auto& p : plans) out.push_back(materialize(p, cycles, cfg));
  return out;
}

std::vector<AugmentedSample> build_augmented_dataset(
    const std::vector<RespiratoryCycle>& cycles, const AugmentConfig& cfg,
    const PairSpec& pairs, AugmentStats* stats) {
  auto plans = plan_augmented_pairs(cycles, cfg, pairs, stats);
  std::vector<AugmentedSample> out;
  out.reserve(plans.size());
  for (const auto& p : plans) out.push_back(materialize(p, cycles, cfg));
  return out;
}

void write_augment_manifest(const std::filesystem::path& path,
                            std::span<const PairPlan> plans,
                            const std::vector<RespiratoryCycle>& cycles) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write manifest: " + path.string());
  f << "anchor_id,partner_id,category,y_normal,y_crackle,y_wheeze,y_aux,"
       "fallback\n";
  for (const auto& p : plans) {
    f << cycles[p.anchor].cycle_id() << ',' << cycles[p.partner].cycle_id()
      << ',' << to_string(p.category) << ',' << label3_to_csv(p.y_main) << ','
      << p.y_aux << ',' << (p.fell_back ? 1 : 0) << '\n';
  }
}

}  // namespace respcls
