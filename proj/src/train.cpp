#include "respcls/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "respcls/eval.hpp"
#include "respcls/log.hpp"
#include "respcls/strfmt.hpp"

namespace respcls {

const char* to_string(LabelMode m) {
  return m == LabelMode::Two ? "two" : "three";
}

void TrainConfig::validate() const {
  if (alpha < 0.0) throw std::invalid_argument("train.alpha must be >= 0");
  if (epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("train.learning_rate must be > 0");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("train.momentum must be in [0,1)");
  }
  if (eval_every < 0) throw std::invalid_argument("train.eval_every must be >= 0");
  if (aux_enabled && !concat_enabled) {
    throw std::invalid_argument(
        "the patient-matching task needs concatenation enabled");
  }
  model.validate();
}

std::vector<Real> main_target(const Label3& y, LabelMode mode) {
  if (mode == LabelMode::Three) {
    return {static_cast<Real>(y.normal), static_cast<Real>(y.crackle),
            static_cast<Real>(y.wheeze)};
  }
  Label2 y2 = label3_to_label2(y);
  return {static_cast<Real>(y2.crackle), static_cast<Real>(y2.wheeze)};
}

namespace {

// Fit statistics on inference-style inputs (each training cycle padded or
// cropped to the full target length). Partials are accumulated per sample
// and merged in index order, so the result is thread-count independent.
FeatureNorm fit_train_norm(const std::vector<RespiratoryCycle>& cycles,
                           std::size_t target_len, int threads) {
  std::vector<NormAccumulator> partials(cycles.size());
  parallel_for(cycles.size(), threads, [&](std::size_t i) {
    auto padded = pad_or_crop(cycles[i].samples, target_len);
    partials[i].add(mel_spectrogram(padded));
  });
  NormAccumulator total;
  for (const auto& p : partials) total.merge(p);
  return total.finalize();
}

struct PlannedEpoch {
  // Either concatenated pairs or bare cycle indices.
  std::vector<PairPlan> pairs;
  bool concatenated = false;
};

Matrix sample_spec(const PlannedEpoch& ep, std::size_t i,
                   const std::vector<RespiratoryCycle>& cycles,
                   const AugmentConfig& acfg, const FeatureNorm& norm) {
  std::vector<double> wave;
  if (ep.concatenated) {
    AugmentedSample s = materialize(ep.pairs[i], cycles, acfg);
    wave = std::move(s.waveform);
  } else {
    wave = pad_or_crop(cycles[i].samples, acfg.target_len);
  }
  MelSpectrogram spec = mel_spectrogram(wave);
  apply_norm(spec, norm);
  return std::move(spec.values);
}

}  // namespace

TrainResult train(const std::vector<RespiratoryCycle>& train_cycles,
                  const std::vector<RespiratoryCycle>& val_cycles,
                  const TrainConfig& cfg, const AugmentConfig& aug_cfg,
                  const PairSpec& pair_spec) {
  cfg.validate();
  aug_cfg.validate();
  pair_spec.validate();
  if (train_cycles.empty()) {
    throw std::invalid_argument("training set is empty");
  }

  const int threads = resolve_threads(cfg.threads);

  ModelConfig mcfg = cfg.model;
  mcfg.main_arity = cfg.label_mode == LabelMode::Three ? 3 : 2;

  TrainResult result{Network(mcfg), FeatureNorm{}, {}, {}, {}};
  result.norm = fit_train_norm(train_cycles, aug_cfg.target_len, threads);
  result.net.init_params(cfg.seed);

  SgdState sgd;
  std::vector<Real> grad;

  const auto n = train_cycles.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    PlannedEpoch ep;
    ep.concatenated = cfg.concat_enabled;
    if (cfg.concat_enabled) {
      AugmentConfig acfg = aug_cfg;
      acfg.seed = aug_cfg.seed + static_cast<std::uint64_t>(epoch);
      if (cfg.aux_enabled) {
        PairSpec ps = pair_spec;
        ps.seed = pair_spec.seed + static_cast<std::uint64_t>(epoch);
        ep.pairs = plan_augmented_pairs(train_cycles, acfg, ps,
                                        &result.augment_stats);
      } else {
        ep.pairs = plan_augmented_pairs(train_cycles, acfg,
                                        &result.augment_stats);
      }
      result.plans.push_back(ep.pairs);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng(derive_seed(cfg.seed, "order-" + std::to_string(epoch)));
    order_rng.shuffle(std::span<std::size_t>(order));

    double sum_main = 0.0, sum_aux = 0.0, sum_total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t bs =
          std::min<std::size_t>(cfg.batch_size, n - start);
      std::vector<TrainSample> samples(bs);
      parallel_for(bs, threads, [&](std::size_t k) {
        const std::size_t idx = order[start + k];
        samples[k].spec =
            sample_spec(ep, idx, train_cycles, aug_cfg, result.norm);
        const Label3 label = ep.concatenated ? ep.pairs[idx].y_main
                                             : train_cycles[idx].label;
        samples[k].y_main = main_target(label, cfg.label_mode);
        samples[k].y_aux =
            (cfg.aux_enabled && ep.concatenated) ? ep.pairs[idx].y_aux : -1;
      });
      std::vector<const TrainSample*> batch(bs);
      for (std::size_t k = 0; k < bs; ++k) batch[k] = &samples[k];

      BatchLoss loss =
          batch_gradient(result.net, batch, cfg.alpha, grad, threads);
      if (!std::isfinite(loss.total)) throw TrainingDiverged(epoch);
      sgd_step(result.net, grad, sgd, cfg.learning_rate, cfg.momentum);

      sum_main += loss.main * static_cast<double>(bs);
      sum_aux += loss.aux * static_cast<double>(bs);
      sum_total += loss.total * static_cast<double>(bs);
      seen += bs;
    }

    EpochLog row;
    row.epoch = epoch;
    row.loss_main = sum_main / static_cast<double>(seen);
    row.loss_aux = sum_aux / static_cast<double>(seen);
    row.loss_total = sum_total / static_cast<double>(seen);

    const bool eval_now =
        cfg.eval_every > 0 && !val_cycles.empty() &&
        ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs);
    if (eval_now) {
      auto records = infer_cycles(result.net, result.norm, val_cycles,
                                  aug_cfg.target_len, threads);
      EvalReport report = icbhi_metrics(records);
      row.val_score = report.score;
    }
    log_info("epoch " + std::to_string(epoch) + ": loss " +
             fmt_double(row.loss_total) +
             (row.val_score ? " val_score " + fmt_double(*row.val_score) : ""));
    result.log.push_back(row);
  }
  return result;
}

void write_train_log_csv(const std::filesystem::path& path,
                         const std::vector<EpochLog>& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write train log: " + path.string());
  f << "epoch,loss_main,loss_aux,loss_total,val_score\n";
  for (const auto& row : log) {
    f << row.epoch << ',' << fmt_double(row.loss_main) << ','
      << fmt_double(row.loss_aux) << ',' << fmt_double(row.loss_total) << ',';
    if (row.val_score) f << fmt_double(*row.val_score);
    f << '\n';
  }
}

}  // namespace respcls
