#include "respcls/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace respcls {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& ctx,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(ctx + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      throw ConfigError("unknown config key: " + ctx + "." + it.key());
    }
  }
}

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for config key ") + key);
  }
}

void parse_synth(const json& j, SynthConfig& cfg) {
  require_keys(j, "synth",
               {"n_patients", "cycles_per_patient", "class_mix",
                "patient_signature_strength", "snr_db", "seed"});
  read_into(j, "n_patients", cfg.n_patients);
  read_into(j, "cycles_per_patient", cfg.cycles_per_patient);
  if (j.contains("class_mix")) {
    auto v = j.at("class_mix");
    if (!v.is_array() || v.size() != 4) {
      throw ConfigError("synth.class_mix must be a 4-element array");
    }
    for (std::size_t i = 0; i < 4; ++i) cfg.class_mix[i] = v.at(i).get<double>();
  }
  read_into(j, "patient_signature_strength", cfg.patient_signature_strength);
  read_into(j, "snr_db", cfg.snr_db);
  read_into(j, "seed", cfg.seed);
}

void parse_augment(const json& j, AugmentConfig& cfg) {
  require_keys(j, "augment", {"target_len_samples", "pair_weights", "seed"});
  read_into(j, "target_len_samples", cfg.target_len);
  if (j.contains("pair_weights")) {
    const auto& w = j.at("pair_weights");
    require_keys(w, "augment.pair_weights",
                 {"same_class_intra_patient", "same_class_cross_patient",
                  "cross_class_intra_patient", "cross_class_cross_patient"});
    read_into(w, "same_class_intra_patient",
              cfg.weights.same_class_intra_patient);
    read_into(w, "same_class_cross_patient",
              cfg.weights.same_class_cross_patient);
    read_into(w, "cross_class_intra_patient",
              cfg.weights.cross_class_intra_patient);
    read_into(w, "cross_class_cross_patient",
              cfg.weights.cross_class_cross_patient);
  }
  read_into(j, "seed", cfg.seed);
}

void parse_sampler(const json& j, PairSpec& cfg) {
  require_keys(j, "sampler", {"strategy", "positive_fraction", "seed"});
  if (j.contains("strategy")) {
    std::string s = j.at("strategy").get<std::string>();
    if (s == "base") {
      cfg.strategy = PairStrategy::Base;
    } else if (s == "hard") {
      cfg.strategy = PairStrategy::Hard;
    } else {
      throw ConfigError("sampler.strategy must be 'base' or 'hard'");
    }
  }
  read_into(j, "positive_fraction", cfg.positive_fraction);
  read_into(j, "seed", cfg.seed);
}

void parse_model(const json& j, ModelConfig& cfg) {
  require_keys(j, "train.model",
               {"input_bands", "stem_pool", "conv1_channels", "embed_dim"});
  read_into(j, "input_bands", cfg.input_bands);
  if (j.contains("stem_pool")) {
    auto v = j.at("stem_pool");
    if (!v.is_array() || v.size() != 2) {
      throw ConfigError("train.model.stem_pool must be [h, w]");
    }
    cfg.stem_pool_h = v.at(0).get<std::size_t>();
    cfg.stem_pool_w = v.at(1).get<std::size_t>();
  }
  read_into(j, "conv1_channels", cfg.conv1_channels);
  read_into(j, "embed_dim", cfg.embed_dim);
}

void parse_train(const json& j, TrainConfig& cfg) {
  require_keys(j, "train",
               {"alpha", "label_mode", "aux_enabled", "concat_enabled",
                "epochs", "batch_size", "learning_rate", "momentum", "seed",
                "threads", "eval_every", "model"});
  read_into(j, "alpha", cfg.alpha);
  if (j.contains("label_mode")) {
    std::string s = j.at("label_mode").get<std::string>();
    if (s == "two") {
      cfg.label_mode = LabelMode::Two;
    } else if (s == "three") {
      cfg.label_mode = LabelMode::Three;
    } else {
      throw ConfigError("train.label_mode must be 'two' or 'three'");
    }
  }
  read_into(j, "aux_enabled", cfg.aux_enabled);
  read_into(j, "concat_enabled", cfg.concat_enabled);
  read_into(j, "epochs", cfg.epochs);
  read_into(j, "batch_size", cfg.batch_size);
  read_into(j, "learning_rate", cfg.learning_rate);
  read_into(j, "momentum", cfg.momentum);
  read_into(j, "seed", cfg.seed);
  read_into(j, "threads", cfg.threads);
  read_into(j, "eval_every", cfg.eval_every);
  if (j.contains("model")) parse_model(j.at("model"), cfg.model);
}

}  // namespace

void RunConfig::validate() const {
  synth.validate();
  augment.validate();
  sampler.validate();
  train.validate();
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(j, "config",
               {"synth", "augment", "sampler", "train", "data_dir", "out_dir"});
  RunConfig cfg;
  if (j.contains("synth")) parse_synth(j.at("synth"), cfg.synth);
  if (j.contains("augment")) parse_augment(j.at("augment"), cfg.augment);
  if (j.contains("sampler")) parse_sampler(j.at("sampler"), cfg.sampler);
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  read_into(j, "data_dir", cfg.data_dir);
  read_into(j, "out_dir", cfg.out_dir);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string snapshot(const RunConfig& cfg) {
  json j = {
      {"data_dir", cfg.data_dir},
      {"out_dir", cfg.out_dir},
      {"synth",
       {{"n_patients", cfg.synth.n_patients},
        {"cycles_per_patient", cfg.synth.cycles_per_patient},
        {"class_mix", cfg.synth.class_mix},
        {"patient_signature_strength", cfg.synth.patient_signature_strength},
        {"snr_db", cfg.synth.snr_db},
        {"seed", cfg.synth.seed}}},
      {"augment",
       {{"target_len_samples", cfg.augment.target_len},
        {"pair_weights",
         {{"same_class_intra_patient",
           cfg.augment.weights.same_class_intra_patient},
          {"same_class_cross_patient",
           cfg.augment.weights.same_class_cross_patient},
          {"cross_class_intra_patient",
           cfg.augment.weights.cross_class_intra_patient},
          {"cross_class_cross_patient",
           cfg.augment.weights.cross_class_cross_patient}}},
        {"seed", cfg.augment.seed}}},
      {"sampler",
       {{"strategy", to_string(cfg.sampler.strategy)},
        {"positive_fraction", cfg.sampler.positive_fraction},
        {"seed", cfg.sampler.seed}}},
      {"train",
       {{"alpha", cfg.train.alpha},
        {"label_mode", to_string(cfg.train.label_mode)},
        {"aux_enabled", cfg.train.aux_enabled},
        {"concat_enabled", cfg.train.concat_enabled},
        {"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"learning_rate", cfg.train.learning_rate},
        {"momentum", cfg.train.momentum},
        {"seed", cfg.train.seed},
        {"threads", cfg.train.threads},
        {"eval_every", cfg.train.eval_every},
        {"model",
         {{"input_bands", cfg.train.model.input_bands},
          {"stem_pool",
           {cfg.train.model.stem_pool_h, cfg.train.model.stem_pool_w}},
          {"conv1_channels", cfg.train.model.conv1_channels},
          {"embed_dim", cfg.train.model.embed_dim}}}}},
  };
  return j.dump(2) + "\n";
}

void write_snapshot(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write snapshot: " + path.string());
  f << snapshot(cfg);
}

}  // namespace respcls
