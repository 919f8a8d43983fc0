#pragma once

#include <string>
#include <utility>
#include <vector>

#include "patrol/tensor.hpp"

namespace patrol::ad {

struct CheckpointError : AdError {
  using AdError::AdError;
};

// Versioned binary dump of named tensors: shapes + raw little-endian doubles.
// Round-trips losslessly.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace patrol::ad
