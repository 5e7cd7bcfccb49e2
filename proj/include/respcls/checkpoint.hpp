#pragma once

#include <filesystem>

#include "respcls/mel.hpp"
#include "respcls/model.hpp"
#include "respcls/train.hpp"

namespace respcls {

struct Checkpoint {
  Network net;
  FeatureNorm norm;
  LabelMode label_mode = LabelMode::Three;
  std::size_t target_len = 160000;
  double alpha = 0.1;
};

// Binary format: 8-byte magic "RSCCKPT1", u32 version, u32 json length, a
// JSON config blob, u32 tensor count, then per tensor a length-prefixed
// name, u8 rank, u64 dims and float64 little-endian data. The feature
// normalization ships as two extra tensors.
void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const FeatureNorm& norm, LabelMode label_mode,
                     std::size_t target_len, double alpha);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace respcls
