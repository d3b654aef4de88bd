// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "flowdisagg/disagg.hpp"

namespace flowdisagg {

/// Everything needed to resume or reproduce inference.
struct Checkpoint {
  DisaggModel model;
  std::optional<nn::AdamState> optimizer;
  /// Fraction of windows used for training; disagg uses it to find the test
  /// span again.
  double train_fraction = 0.8;
};

/// JSON document: dimensions, row-major parameter arrays, scaler statistics,
/// optimizer moments and the seed. Doubles are written in shortest
/// round-trip form, so load(save(m)) reproduces inference bit-for-bit.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flowdisagg
