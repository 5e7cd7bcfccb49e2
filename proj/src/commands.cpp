#include "respcls/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "respcls/checkpoint.hpp"
#include "respcls/log.hpp"
#include "respcls/strfmt.hpp"

namespace respcls {

namespace fs = std::filesystem;

void run_synth(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.synth.validate();
  Dataset ds = synth_generate(cfg.synth);
  write_icbhi_tree(ds, out_dir);
  RunConfig resolved = cfg;
  resolved.out_dir = out_dir.string();
  write_snapshot(out_dir / "config.json", resolved);
  log_info("synthesized " + std::to_string(ds.cycles.size()) + " cycles from " +
           std::to_string(cfg.synth.n_patients) + " patients into " +
           out_dir.string());
}

std::size_t run_ingest(const fs::path& audio_dir, const fs::path& split_file,
                       const fs::path& out_manifest) {
  Dataset ds = load_dataset(audio_dir, split_file);
  write_manifest_csv(out_manifest, ds);
  log_info("ingested " + std::to_string(ds.cycles.size()) + " cycles from " +
           std::to_string(ds.recordings.size()) + " recordings");
  return ds.cycles.size();
}

TrainArtifacts run_train(const RunConfig& cfg, const fs::path& data_dir,
                         const fs::path& out_dir, bool dump_pairs) {
  cfg.validate();
  Dataset ds = load_dataset(data_dir / "audio", data_dir / "split.txt");
  auto train_cycles = ds.cycles_for(Split::Train);
  auto test_cycles = ds.cycles_for(Split::Test);
  if (train_cycles.empty()) {
    throw ConfigError("dataset has no training cycles: " + data_dir.string());
  }

  TrainResult result =
      train(train_cycles, test_cycles, cfg.train, cfg.augment, cfg.sampler);

  fs::create_directories(out_dir);
  TrainArtifacts art;
  art.checkpoint = out_dir / "checkpoint.bin";
  art.train_log = out_dir / "train_log.csv";
  art.snapshot = out_dir / "config.json";
  save_checkpoint(art.checkpoint, result.net, result.norm,
                  cfg.train.label_mode, cfg.augment.target_len,
                  cfg.train.alpha);
  write_train_log_csv(art.train_log, result.log);
  RunConfig resolved = cfg;
  resolved.data_dir = data_dir.string();
  resolved.out_dir = out_dir.string();
  write_snapshot(art.snapshot, resolved);

  if (dump_pairs && !result.plans.empty()) {
    art.pairs_manifest = out_dir / "pairs.csv";
    // per-epoch manifests concatenated with an epoch column
    std::ofstream f(art.pairs_manifest);
    if (!f) throw std::runtime_error("cannot write pairs manifest");
    f << "epoch,anchor_id,partner_id,category,y_normal,y_crackle,y_wheeze,"
         "y_aux,fallback\n";
    for (std::size_t e = 0; e < result.plans.size(); ++e) {
      for (const auto& p : result.plans[e]) {
        f << e << ',' << train_cycles[p.anchor].cycle_id() << ','
          << train_cycles[p.partner].cycle_id() << ',' << to_string(p.category)
          << ',' << label3_to_csv(p.y_main) << ',' << p.y_aux << ','
          << (p.fell_back ? 1 : 0) << '\n';
      }
    }
  }
  return art;
}

namespace {

void write_eval_outputs(const fs::path& out_dir,
                        const std::vector<PredictionRecord>& records,
                        const EvalReport& report, const EvalOptions& opts) {
  fs::create_directories(out_dir);
  write_predictions_csv(out_dir / "predictions.csv", records);
  write_metrics_csv(out_dir / "metrics.csv", report);
  write_report_text(out_dir / "report.txt", report);

  const bool three = !records.empty() && records.front().probs.size() == 3;
  const char* names[3] = {"normal", "crackle", "wheeze"};
  for (int bit = three ? 0 : 1; bit < 3; ++bit) {
    PrCurve curve = pr_curve_and_ap(records, bit);
    write_pr_csv(out_dir / ("pr_" + std::string(names[bit]) + ".csv"), curve);
    if (opts.svg) {
      write_pr_svg(out_dir / ("pr_" + std::string(names[bit]) + ".svg"), curve,
                   names[bit]);
    }
  }
}

}  // namespace

EvalArtifacts run_eval(const fs::path& checkpoint_path,
                       const fs::path& data_dir, const fs::path& out_dir,
                       const EvalOptions& opts, int threads) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Dataset ds = load_dataset(data_dir / "audio", data_dir / "split.txt");
  auto test_cycles = ds.cycles_for(Split::Test);
  if (test_cycles.empty()) {
    throw ConfigError("dataset has no test cycles: " + data_dir.string());
  }
  auto records = infer_cycles(ck.net, ck.norm, test_cycles, ck.target_len,
                              resolve_threads(threads));
  EvalArtifacts art;
  art.report = full_report(records);
  write_eval_outputs(out_dir, records, art.report, opts);

  if (opts.export_embeddings) {
    auto train_cycles = ds.cycles_for(Split::Train);
    if (train_cycles.size() >= 2) {
      AugmentConfig acfg;
      acfg.target_len = ck.target_len;
      auto plans = plan_augmented_pairs(train_cycles, acfg);
      export_embeddings(ck.net, ck.norm, plans, train_cycles, acfg,
                        out_dir / "embeddings.csv", resolve_threads(threads));
    }
  }
  log_info("eval: " + std::string(art.report.score
                                      ? "score " + fmt_double(*art.report.score)
                                      : "score undefined"));
  return art;
}

EvalArtifacts run_eval_multi(const RunConfig& cfg, const fs::path& data_dir,
                             const fs::path& out_dir, const EvalOptions& opts) {
  if (opts.runs < 2) {
    throw ConfigError("multi-run evaluation needs --runs >= 2");
  }
  EvalArtifacts art;
  for (int r = 0; r < opts.runs; ++r) {
    RunConfig run_cfg = cfg;
    run_cfg.train.seed = cfg.train.seed + static_cast<std::uint64_t>(r);
    run_cfg.augment.seed = cfg.augment.seed + static_cast<std::uint64_t>(r);
    run_cfg.sampler.seed = cfg.sampler.seed + static_cast<std::uint64_t>(r);
    fs::path run_dir = out_dir / ("run_" + std::to_string(r));
    TrainArtifacts ta = run_train(run_cfg, data_dir, run_dir);
    EvalArtifacts ea = run_eval(ta.checkpoint, data_dir, run_dir, opts,
                                cfg.train.threads);
    art.run_reports.push_back(ea.report);
    log_info("run " + std::to_string(r) + " done");
  }
  AggregateReport agg = aggregate_runs(art.run_reports);
  write_aggregate_csv(out_dir / "aggregate.csv", agg);
  write_aggregate_text(out_dir / "aggregate.txt", agg);
  return art;
}

AggregateReport run_report(const std::vector<fs::path>& inputs,
                           const fs::path& out_dir) {
  std::vector<EvalReport> reports;
  reports.reserve(inputs.size());
  for (const auto& p : inputs) reports.push_back(read_metrics_csv(p));
  AggregateReport agg = aggregate_runs(reports);
  fs::create_directories(out_dir);
  write_aggregate_csv(out_dir / "aggregate.csv", agg);
  write_aggregate_text(out_dir / "aggregate.txt", agg);
  return agg;
}

fs::path default_run_dir(const fs::path& root, std::uint64_t seed) {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return root / (std::string(buf) + "_seed" + std::to_string(seed));
}

}  // namespace respcls
