#pragma once

// Checkpoint layout:
//   8 bytes   magic "KTGNNCK1"
//   8 bytes   header length L, little-endian uint64
//   L bytes   JSON header {"format_version": 1, "config": {...},
//                          "tensors": [{"name", "rows", "cols", "offset"}, ...]}
//   payload   row-major little-endian IEEE doubles; "offset" counts doubles
//             from the start of the payload

#include "ktgnn/params.hpp"

#include <json.hpp>

#include <filesystem>

namespace ktgnn {

inline constexpr char kCheckpointMagic[9] = "KTGNNCK1";

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const nlohmann::json& config);

struct Checkpoint {
  nlohmann::json config;
  std::vector<NamedParam> tensors;  // constant leaves holding the stored values
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies stored values into `params` by name. Throws DataError on a missing
/// name, extra name, or shape mismatch.
void load_into(const Checkpoint& ck, const ParamSet& params);

}  // namespace ktgnn
