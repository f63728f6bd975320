#pragma once

#include <string>
#include <vector>

#include "camoseg/config.hpp"
#include "camoseg/segmodel.hpp"
#include "camoseg/tensor.hpp"

namespace camoseg {

// On-disk format:
//   "CAMT" | u32 version (LE) | u64 manifest length (LE) | manifest JSON |
//   payload of raw little-endian f64 blobs.
// The manifest records epoch/iter/teacher_active, the full resolved config
// plus its hash, and per-tensor (name, section, shape, element offset)
// entries in payload order: student, teacher, momentum.
struct Checkpoint {
  int epoch = 0;
  long iter = 0;
  bool teacher_active = false;
  RunConfig config;
  ModelParams student;  // loads with gradients enabled
  ModelParams teacher;  // loads detached
  std::vector<Tensor> momentum;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ck);

// Throws CheckpointError (with the path in the message) on any structural
// problem: bad magic, unknown version, malformed manifest, size mismatches,
// or a parameter list that does not match the model architecture.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace camoseg
