#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cd2cdr/mat.hpp"
#include "cd2cdr/params.hpp"

namespace cd2cdr {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointBlock {
  std::string name;
  Mat value;
};

// A directory holding manifest.json plus one little-endian f32 blob per block, row-major.
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string config_hash;
  std::string phase;
  std::vector<CheckpointBlock> blocks;
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> attributes;

  void add(const std::string& name, const Mat& value);
  void add_params(const ParamList& params);
  bool has(const std::string& name) const;
  // Throws IntegrityError when missing.
  const Mat& block(const std::string& name) const;
  // Copies blocks into matching parameters; names and shapes must agree.
  void restore_params(const ParamList& params) const;
  double scalar(const std::string& name) const;
  const std::string& attribute(const std::string& name) const;
};

// Values are stored as 32-bit floats; save(load(save(x))) is byte-identical.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);

/// Throws IntegrityError naming the block when a blob is missing, truncated, oversized,
/// or disagrees with the manifest shape, and on an unknown version.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// File name used for a block's blob.
std::string blob_file_name(const std::string& block_name);

}  // namespace cd2cdr
