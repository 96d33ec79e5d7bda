/*
   Copyright 2026 The mcunc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <string_view>

#include "json.hpp"

namespace mcunc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Defaults for a subcommand's config keys.
nlohmann::json default_config(std::string_view command);

/// Each command takes a fully resolved config (defaults, then config file,
/// then flags) and writes its outputs under config["out"], which must exist.
void cmd_train_demo(const nlohmann::json& config);
void cmd_predict(const nlohmann::json& config);
void cmd_analyze(const nlohmann::json& config);
void cmd_referral(const nlohmann::json& config);
void cmd_sweep(const nlohmann::json& config);
void cmd_saliency(const nlohmann::json& config);

/// Parses argv, dispatches, maps errors to exit codes.
int run(int argc, const char* const* argv);

}  // namespace mcunc::cli
