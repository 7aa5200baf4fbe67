#pragma once

#include <string>

#include "hdcn/model.hpp"

namespace hdcn {

// Binary checkpoint:
//   8 bytes   magic "HDCNCKPT"
//   u32       format version
//   u64       header length N
//   N bytes   JSON header: model config, seed, vocab tokens, slot inventory,
//             ordered parameter names and shapes, optimizer step
//   f64[]     parameter values in header order, little-endian
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Model& model);
// Rejects bad magic, unknown versions, truncated data and any parameter
// whose shape disagrees with what the stored config requires.
Model load_checkpoint(const std::string& path);

}  // namespace hdcn
