// Command-line front end: synth, ingest, train, eval, report. Every command
// accepts a JSON config plus flag overrides and leaves a resolved snapshot
// next to its outputs, so runs are reproducible from their own artifacts.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "respcls/commands.hpp"
#include "respcls/log.hpp"

namespace {

using respcls::RunConfig;

struct CommonFlags {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = respcls::load_run_config(flags.config_path);
  }
  if (!flags.data_dir.empty()) cfg.data_dir = flags.data_dir;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.seed) {
    cfg.synth.seed = *flags.seed;
    cfg.augment.seed = *flags.seed;
    cfg.sampler.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  return cfg;
}

std::filesystem::path pick_out_dir(const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  return respcls::default_run_dir("runs", seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"respiratory-cycle concatenation training pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", flags.config_path, "JSON config file");
  synth->add_option("--out", flags.out_dir, "output dataset directory");
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--seed", synth_seed, "synthesis seed");
  std::optional<int> n_patients, cycles_per_patient;
  std::optional<double> signature, snr;
  std::vector<double> class_mix;
  synth->add_option("--n-patients", n_patients);
  synth->add_option("--cycles-per-patient", cycles_per_patient);
  synth->add_option("--class-mix", class_mix,
                    "P(normal) P(crackle) P(wheeze) P(both)")
      ->expected(4);
  synth->add_option("--signature-strength", signature);
  synth->add_option("--snr-db", snr);

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "re-ingest a dataset tree");
  std::string ingest_audio, ingest_split, ingest_out = "manifest.csv";
  ingest->add_option("--audio-dir", ingest_audio)->required();
  ingest->add_option("--split", ingest_split)->required();
  ingest->add_option("--out", ingest_out, "manifest CSV path");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", flags.config_path, "JSON config file");
  train->add_option("--data", flags.data_dir, "dataset directory")
      ->check(CLI::ExistingDirectory);
  train->add_option("--out", flags.out_dir, "run output directory");
  std::optional<std::uint64_t> train_seed;
  train->add_option("--seed", train_seed, "training seed");
  std::optional<bool> concat_on, multi_on, pm_on;
  train->add_flag("--concat,!--no-concat", concat_on,
                  "multi-cycle concatenation");
  train->add_flag("--multi,!--no-multi", multi_on,
                  "3-label formulation (off = 2-label)");
  train->add_flag("--pm,!--no-pm", pm_on, "patient-matching auxiliary task");
  std::optional<std::string> aux_strategy;
  train->add_option("--aux", aux_strategy, "negative sampling: base|hard");
  std::optional<double> alpha, lr;
  std::optional<int> epochs, batch, threads;
  train->add_option("--alpha", alpha);
  train->add_option("--lr", lr);
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch);
  train->add_option("--threads", threads);
  bool dump_pairs = false;
  train->add_flag("--pairs-manifest", dump_pairs,
                  "dump the per-epoch pairing audit CSV");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate on the test split");
  eval->add_option("--config", flags.config_path, "JSON config file");
  eval->add_option("--data", flags.data_dir, "dataset directory");
  eval->add_option("--out", flags.out_dir, "output directory");
  std::string checkpoint_path;
  eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
  int runs = 1;
  eval->add_option("--runs", runs, "retrain k seeds and aggregate");
  bool export_emb = false, svg = false;
  eval->add_flag("--export-embeddings", export_emb);
  eval->add_flag("--svg", svg, "also draw PR curves as SVG");
  std::optional<std::uint64_t> eval_seed;
  eval->add_option("--seed", eval_seed, "base seed for --runs mode");

  // ---- report ----
  auto* report = app.add_subcommand("report", "aggregate metrics CSVs");
  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  report->add_option("--inputs", report_inputs, "metrics.csv files")
      ->required()
      ->expected(-2);
  report->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      flags.seed = synth_seed;
      RunConfig cfg = resolve_config(flags);
      if (n_patients) cfg.synth.n_patients = *n_patients;
      if (cycles_per_patient) cfg.synth.cycles_per_patient = *cycles_per_patient;
      if (!class_mix.empty()) {
        for (std::size_t i = 0; i < 4; ++i) cfg.synth.class_mix[i] = class_mix[i];
      }
      if (signature) cfg.synth.patient_signature_strength = *signature;
      if (snr) cfg.synth.snr_db = *snr;
      if (cfg.out_dir.empty()) {
        throw respcls::ConfigError("synth needs --out (or out_dir in config)");
      }
      respcls::run_synth(cfg, cfg.out_dir);
      return 0;
    }
    if (ingest->parsed()) {
      respcls::run_ingest(ingest_audio, ingest_split, ingest_out);
      return 0;
    }
    if (train->parsed()) {
      flags.seed = train_seed;
      RunConfig cfg = resolve_config(flags);
      if (concat_on) cfg.train.concat_enabled = *concat_on;
      if (multi_on) {
        cfg.train.label_mode =
            *multi_on ? respcls::LabelMode::Three : respcls::LabelMode::Two;
      }
      if (pm_on) cfg.train.aux_enabled = *pm_on;
      if (aux_strategy) {
        if (*aux_strategy == "base") {
          cfg.sampler.strategy = respcls::PairStrategy::Base;
        } else if (*aux_strategy == "hard") {
          cfg.sampler.strategy = respcls::PairStrategy::Hard;
        } else {
          throw respcls::ConfigError("--aux must be base or hard");
        }
      }
      if (alpha) cfg.train.alpha = *alpha;
      if (lr) cfg.train.learning_rate = *lr;
      if (epochs) cfg.train.epochs = *epochs;
      if (batch) cfg.train.batch_size = *batch;
      if (threads) cfg.train.threads = *threads;
      if (cfg.data_dir.empty()) {
        throw respcls::ConfigError("train needs --data (or data_dir in config)");
      }
      auto out = pick_out_dir(cfg, cfg.train.seed);
      auto art = respcls::run_train(cfg, cfg.data_dir, out, dump_pairs);
      std::cout << "checkpoint: " << art.checkpoint.string() << "\n";
      return 0;
    }
    if (eval->parsed()) {
      flags.seed = eval_seed;
      RunConfig cfg = resolve_config(flags);
      if (cfg.data_dir.empty()) {
        throw respcls::ConfigError("eval needs --data (or data_dir in config)");
      }
      respcls::EvalOptions opts;
      opts.runs = runs;
      opts.export_embeddings = export_emb;
      opts.svg = svg;
      auto out = pick_out_dir(cfg, cfg.train.seed);
      if (runs > 1) {
        auto art = respcls::run_eval_multi(cfg, cfg.data_dir, out, opts);
        std::cout << "aggregate: " << (out / "aggregate.txt").string() << "\n";
      } else {
        if (checkpoint_path.empty()) {
          throw respcls::ConfigError("single-run eval needs --checkpoint");
        }
        auto art =
            respcls::run_eval(checkpoint_path, cfg.data_dir, out, opts,
                              cfg.train.threads);
        if (art.report.score) {
          std::cout << "score: " << *art.report.score << "\n";
        } else {
          std::cout << "score: undefined (a class has zero support)\n";
        }
      }
      return 0;
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> inputs(report_inputs.begin(),
                                                report_inputs.end());
      respcls::run_report(inputs, report_out);
      std::cout << "aggregate: "
                << (std::filesystem::path(report_out) / "aggregate.txt").string()
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
