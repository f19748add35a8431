// Copyright 2026 The dbnrl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DBNRL_TOOLS_CLI_HPP_
#define DBNRL_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace dbnrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

// Runs one command line (without the program name). Diagnostics go to err,
// the one-line summary of what was written goes to out.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace dbnrl::cli

#endif  // DBNRL_TOOLS_CLI_HPP_
