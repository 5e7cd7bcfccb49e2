#pragma once

#include <filesystem>
#include <string>

#include "respcls/augment.hpp"
#include "respcls/sampler.hpp"
#include "respcls/synth.hpp"
#include "respcls/train.hpp"

namespace respcls {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Single declarative config: every pipeline knob in one file, overridable
// from the command line. Unknown keys are rejected so typos cannot silently
// fall back to defaults.
struct RunConfig {
  SynthConfig synth;
  AugmentConfig augment;
  PairSpec sampler;
  TrainConfig train;
  std::string data_dir;
  std::string out_dir;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical snapshot; parse_run_config(snapshot(cfg)) reproduces cfg and the
// serialization is byte-stable.
std::string snapshot(const RunConfig& cfg);

void write_snapshot(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace respcls
