#pragma once

#include <filesystem>
#include <vector>

#include "respcls/config.hpp"
#include "respcls/eval.hpp"

namespace respcls {

// Command bodies shared by the CLI binary and the test suites. Each writes
// its artifacts under an explicit output directory and drops the resolved
// config snapshot next to them, so any run can be reproduced from its own
// output tree.

// Dataset tree (audio/, split.txt, manifest.csv) plus config.json.
void run_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Re-ingests a dataset tree and writes a manifest; returns the cycle count.
std::size_t run_ingest(const std::filesystem::path& audio_dir,
                       const std::filesystem::path& split_file,
                       const std::filesystem::path& out_manifest);

struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path train_log;
  std::filesystem::path snapshot;
  std::filesystem::path pairs_manifest;  // empty unless requested
};

TrainArtifacts run_train(const RunConfig& cfg,
                         const std::filesystem::path& data_dir,
                         const std::filesystem::path& out_dir,
                         bool dump_pairs = false);

struct EvalOptions {
  int runs = 1;  // > 1 retrains with seeds seed..seed+runs-1 and aggregates
  bool export_embeddings = false;
  bool svg = false;
};

struct EvalArtifacts {
  EvalReport report;                   // single-run
  std::vector<EvalReport> run_reports; // multi-run
};

// Single-run form: evaluates an existing checkpoint on the test split.
EvalArtifacts run_eval(const std::filesystem::path& checkpoint_path,
                       const std::filesystem::path& data_dir,
                       const std::filesystem::path& out_dir,
                       const EvalOptions& opts, int threads = 0);

// Multi-run form: trains `opts.runs` models (run seeds offset by the run
// index), evaluates each under out_dir/run_<i>/, and writes the aggregate.
EvalArtifacts run_eval_multi(const RunConfig& cfg,
                             const std::filesystem::path& data_dir,
                             const std::filesystem::path& out_dir,
                             const EvalOptions& opts);

// Aggregates previously written metrics CSVs.
AggregateReport run_report(const std::vector<std::filesystem::path>& inputs,
                           const std::filesystem::path& out_dir);

// runs/<timestamp>_seed<k> default layout for interactive use.
std::filesystem::path default_run_dir(const std::filesystem::path& root,
                                      std::uint64_t seed);

}  // namespace respcls
