// SPDX-License-Identifier: Apache-2.0
//
// Checkpoints are one JSON document:
//   {"format": "hetstar-checkpoint", "version": 1, "config": {...},
//    "vocabulary": {"tokens": [...], "chars": [...], "pos": [...]},
//    "parameters": {"<name>": {"shape": [r, c], "data": "<base64>"}, ...}}
// where data holds the values as little-endian IEEE-754 doubles. Keys are
// written in sorted order, so save -> load -> save is byte-identical.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "hetstar/model.hpp"

namespace hetstar {

inline constexpr int kCheckpointVersion = 1;

std::string save_checkpoint(const Model& model);
/// Throws DataError on malformed documents, unknown versions or shape mismatches.
Model load_checkpoint(const std::string& document);

void save_checkpoint_file(const Model& model, const std::string& path);
Model load_checkpoint_file(const std::string& path);

std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& base64);

}  // namespace hetstar
