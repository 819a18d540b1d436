#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "pfid/model.hpp"

namespace pfid {

/// Free-form string metadata stored alongside the parameters.
using CheckpointMetadata = std::map<std::string, std::string>;

struct Checkpoint {
  Network network;
  CheckpointMetadata metadata;
};

/// Text checkpoint, format version 1:
///
///   pfid-checkpoint 1
///   meta <key> <value...>           (zero or more, keys sorted)
///   input_dim <n>
///   hidden_dims <count> <n...>
///   embedding_dim <n>
///   num_classes <n>
///   activation relu
///   seed <n>
///   layer <index> <rows> <cols>
///   <rows * cols hex-float weights, row-major, one row per line>
///   <rows hex-float biases on one line>
///   ...
///   end
///
/// Hex-float parameters make the round trip bit-exact and byte-order free.
std::string serialize_checkpoint(const Network& net, const CheckpointMetadata& metadata = {});
Checkpoint parse_checkpoint(const std::string& text);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pfid
