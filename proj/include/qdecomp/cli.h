// Copyright 2026 The qdecomp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QDECOMP_CLI_H_
#define QDECOMP_CLI_H_

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace qdecomp::cli {

inline constexpr std::string_view kToolName = "qdecomp";
inline constexpr int kSchemaVersion = 1;

// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 internal error. `args` includes the program name.
int Run(std::span<const std::string> args, std::ostream& out,
        std::ostream& err);
int Run(int argc, const char* const* argv);

// Lower-case hex SHA-256 of a file's bytes or of a string.
std::string Sha256File(const std::filesystem::path& path);
std::string Sha256Hex(std::string_view bytes);

}  // namespace qdecomp::cli

#endif  // QDECOMP_CLI_H_
