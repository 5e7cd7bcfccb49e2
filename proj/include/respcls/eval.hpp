#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "respcls/augment.hpp"
#include "respcls/ingest.hpp"
#include "respcls/mel.hpp"
#include "respcls/model.hpp"

namespace respcls {

struct PredictionRecord {
  std::string cycle_id;
  std::vector<double> probs;  // arity 3 ([normal,crackle,wheeze]) or 2
  Label3 truth;
  PatientId patient;
};

// Pads or crops the cycle to the full network length, featurizes, forwards,
// and takes the logistic of the main logits.
PredictionRecord infer_cycle(const Network& net, const FeatureNorm& norm,
                             const RespiratoryCycle& cycle,
                             std::size_t target_len);

std::vector<PredictionRecord> infer_cycles(
    const Network& net, const FeatureNorm& norm,
    const std::vector<RespiratoryCycle>& cycles, std::size_t target_len,
    int threads = 1);

// Threshold at 0.5 (boundary counts as positive), then apply the class
// priority rule. A 2-value vector is treated as [0, crackle, wheeze]:
// Normal is predicted only when both bits stay below threshold.
IcbhiClass binarize_and_classify(std::span<const double> probs);

struct EvalReport {
  std::optional<double> sp;     // percent
  std::optional<double> se;     // percent
  std::optional<double> score;  // percent; withheld when sp or se undefined
  std::array<std::array<int, 4>, 4> confusion{};  // [true][pred]
  std::array<int, 4> support{};
  std::optional<double> ap_normal, ap_crackle, ap_wheeze;
  int n_records = 0;
};

// Sp = correct Normal / Normal support; Se = exact-class-correct abnormal /
// abnormal support; Score = (Sp + Se) / 2. A side with zero support leaves
// its metric (and the Score) unset.
EvalReport icbhi_metrics(const std::vector<PredictionRecord>& records);

// Adds the three per-class APs (skipping normal for 2-value records).
EvalReport full_report(const std::vector<PredictionRecord>& records);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one per distinct score, descending
  std::optional<double> ap;     // unset when the class has no positives
  int n_pos = 0;
};

// class_bit: 0 = normal, 1 = crackle, 2 = wheeze. Equal scores are
// processed together; AP is the step-wise sum over recall increments.
PrCurve pr_curve_and_ap(const std::vector<PredictionRecord>& records,
                        int class_bit);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1)
};

struct AggregateReport {
  std::optional<MetricStats> sp, se, score;
  std::optional<MetricStats> ap_normal, ap_crackle, ap_wheeze;
  int n_runs = 0;
};

// Requires at least two reports; aggregates each metric over the runs where
// it is defined in every report.
AggregateReport aggregate_runs(const std::vector<EvalReport>& reports);

// One row per augmented sample: id, constituent-derived tag
// (pure-normal / pure-abnormal / mixed), then the embedding.
void export_embeddings(const Network& net, const FeatureNorm& norm,
                       std::span<const PairPlan> plans,
                       const std::vector<RespiratoryCycle>& cycles,
                       const AugmentConfig& cfg,
                       const std::filesystem::path& path, int threads = 1);

void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<PredictionRecord>& records);
void write_metrics_csv(const std::filesystem::path& path,
                       const EvalReport& report);
EvalReport read_metrics_csv(const std::filesystem::path& path);
void write_report_text(const std::filesystem::path& path,
                       const EvalReport& report);
void write_aggregate_csv(const std::filesystem::path& path,
                         const AggregateReport& agg);
void write_aggregate_text(const std::filesystem::path& path,
                          const AggregateReport& agg);
void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve);
void write_pr_svg(const std::filesystem::path& path, const PrCurve& curve,
                  const std::string& title);

}  // namespace respcls
