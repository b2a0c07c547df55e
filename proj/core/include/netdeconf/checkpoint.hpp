#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "netdeconf/model.hpp"

namespace netdeconf {

/// A trained model plus what is needed to rebuild the forward pass.
struct Checkpoint {
  Architecture arch;
  std::uint64_t seed = 0;
  bool identity_adjacency = false;
  ModelParams params;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Text serialization; values use shortest round-trip formatting, so
/// load(save(c)) == c bit for bit.
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on any malformed or inconsistent content.
Checkpoint deserialize_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace netdeconf
