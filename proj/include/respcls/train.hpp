#pragma once

#include <optional>
#include <vector>

#include "respcls/augment.hpp"
#include "respcls/mel.hpp"
#include "respcls/model.hpp"

namespace respcls {

enum class LabelMode { Two, Three };

const char* to_string(LabelMode m);

struct TrainConfig {
  double alpha = 0.1;
  LabelMode label_mode = LabelMode::Three;
  bool aux_enabled = true;
  bool concat_enabled = true;
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  int threads = 0;     // 0 = hardware default
  int eval_every = 1;  // epochs between validation scores; 0 = never
  ModelConfig model;   // main_arity is overwritten from label_mode

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double loss_main = 0.0;
  double loss_aux = 0.0;
  double loss_total = 0.0;
  std::optional<double> val_score;
};

struct TrainingDiverged : std::runtime_error {
  int epoch;
  explicit TrainingDiverged(int e)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(e)),
        epoch(e) {}
};

struct TrainResult {
  Network net;
  FeatureNorm norm;
  std::vector<EpochLog> log;
  AugmentStats augment_stats;                 // accumulated over epochs
  std::vector<std::vector<PairPlan>> plans;   // per-epoch pairings (audit)
};

// Deterministic under cfg.seed. With concatenation on, pairings are redrawn
// each epoch with seed = base seed + epoch; with it off, single cycles are
// padded/cropped to the full target length. In two-label mode the combined
// label is projected to [crackle, wheeze] at loss time. Feature
// normalization is fit on the training cycles only (padded to the inference
// length) and never sees validation data.
TrainResult train(const std::vector<RespiratoryCycle>& train_cycles,
                  const std::vector<RespiratoryCycle>& val_cycles,
                  const TrainConfig& cfg, const AugmentConfig& aug_cfg,
                  const PairSpec& pair_spec);

std::vector<Real> main_target(const Label3& y, LabelMode mode);

void write_train_log_csv(const std::filesystem::path& path,
                         const std::vector<EpochLog>& log);

}  // namespace respcls
