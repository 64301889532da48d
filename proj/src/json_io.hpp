// SPDX-License-Identifier: Apache-2.0
// JSON forms shared by the config, checkpoint and dataset readers.
#pragma once

#include <json.hpp>

#include "hetstar/model.hpp"

namespace hetstar::detail {

using json = nlohmann::json;

json config_to_json(const Config& c);
/// Missing keys keep their defaults; unknown keys are rejected.
Config config_from_json(const json& j);

}  // namespace hetstar::detail
