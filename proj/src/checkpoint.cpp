#include "respcls/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace respcls {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

constexpr char kMagic[8] = {'R', 'S', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

void put_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint32_t get_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

std::uint64_t get_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void put_tensor(std::ofstream& f, const std::string& name,
                std::span<const std::size_t> shape,
                std::span<const double> data) {
  put_u32(f, static_cast<std::uint32_t>(name.size()));
  f.write(name.data(), static_cast<std::streamsize>(name.size()));
  f.put(static_cast<char>(shape.size()));
  for (std::size_t d : shape) put_u64(f, d);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
}

struct RawTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

RawTensor get_tensor(std::ifstream& f) {
  RawTensor t;
  std::uint32_t name_len = get_u32(f);
  t.name.resize(name_len);
  f.read(t.name.data(), name_len);
  int rank = f.get();
  if (rank < 0) throw std::runtime_error("truncated checkpoint tensor");
  t.shape.resize(static_cast<std::size_t>(rank));
  std::size_t n = 1;
  for (auto& d : t.shape) {
    d = static_cast<std::size_t>(get_u64(f));
    n *= d;
  }
  t.data.resize(n);
  f.read(reinterpret_cast<char*>(t.data.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("truncated checkpoint tensor data");
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const FeatureNorm& norm, LabelMode label_mode,
                     std::size_t target_len, double alpha) {
  const ModelConfig& cfg = net.config();
  nlohmann::json meta = {
      {"alpha", alpha},
      {"label_mode", to_string(label_mode)},
      {"target_len", target_len},
      {"model",
       {{"input_bands", cfg.input_bands},
        {"stem_pool", {cfg.stem_pool_h, cfg.stem_pool_w}},
        {"conv1_channels", cfg.conv1_channels},
        {"embed_dim", cfg.embed_dim},
        {"main_arity", cfg.main_arity}}},
  };
  std::string blob = meta.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());
  f.write(kMagic, 8);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(blob.size()));
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  put_u32(f, static_cast<std::uint32_t>(net.slots().size() + 2));
  auto params = net.params();
  for (const auto& slot : net.slots()) {
    put_tensor(f, slot.name, slot.shape,
               params.subspan(slot.offset, slot.size()));
  }
  std::size_t bands[1] = {norm.mean.size()};
  put_tensor(f, "feature_norm.mean", bands, norm.mean);
  put_tensor(f, "feature_norm.stddev", bands, norm.stddev);
  if (!f) throw std::runtime_error("short checkpoint write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("bad checkpoint magic: " + path.string());
  }
  std::uint32_t version = get_u32(f);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  }
  std::uint32_t blob_len = get_u32(f);
  std::string blob(blob_len, '\0');
  f.read(blob.data(), blob_len);
  if (!f) throw std::runtime_error("truncated checkpoint: " + path.string());
  nlohmann::json meta = nlohmann::json::parse(blob);

  ModelConfig cfg;
  const auto& m = meta.at("model");
  cfg.input_bands = m.at("input_bands").get<std::size_t>();
  cfg.stem_pool_h = m.at("stem_pool").at(0).get<std::size_t>();
  cfg.stem_pool_w = m.at("stem_pool").at(1).get<std::size_t>();
  cfg.conv1_channels = m.at("conv1_channels").get<std::size_t>();
  cfg.embed_dim = m.at("embed_dim").get<std::size_t>();
  cfg.main_arity = m.at("main_arity").get<std::size_t>();

  Checkpoint ck{Network(cfg), FeatureNorm{}, LabelMode::Three,
                meta.at("target_len").get<std::size_t>(),
                meta.at("alpha").get<double>()};
  ck.label_mode = meta.at("label_mode").get<std::string>() == "two"
                      ? LabelMode::Two
                      : LabelMode::Three;

  std::uint32_t count = get_u32(f);
  auto params = ck.net.params();
  for (std::uint32_t i = 0; i < count; ++i) {
    RawTensor t = get_tensor(f);
    if (t.name == "feature_norm.mean") {
      ck.norm.mean = std::move(t.data);
      continue;
    }
    if (t.name == "feature_norm.stddev") {
      ck.norm.stddev = std::move(t.data);
      continue;
    }
    bool matched = false;
    for (const auto& slot : ck.net.slots()) {
      if (slot.name != t.name) continue;
      if (slot.size() != t.data.size()) {
        throw std::runtime_error("checkpoint tensor size mismatch for " +
                                 t.name);
      }
      std::copy(t.data.begin(), t.data.end(), params.begin() + slot.offset);
      matched = true;
      break;
    }
    if (!matched) {
      throw std::runtime_error("unknown checkpoint tensor: " + t.name);
    }
  }
  if (ck.norm.mean.empty() || ck.norm.stddev.empty()) {
    throw std::runtime_error("checkpoint missing feature normalization");
  }
  return ck;
}

}  // namespace respcls
