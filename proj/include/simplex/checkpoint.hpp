#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "simplex/model.hpp"

namespace simplex {

// Binary layout, all little-endian:
//   "SIMPLEX\0" | u8 version | u32 dim, num_users, num_items, history_len |
//   u8 aggregation | u8 similarity | f64 g | f64 cosine_eps |
//   tensors in kTensorNames order as f32, row-major.
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderConfig encoder;
  std::size_t history_len = 0;
  ModelParams<float> params;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws CheckpointError on a bad magic string, unknown version or a size
// that does not match the header.
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace simplex
