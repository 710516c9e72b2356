// Copyright 2026 The nuqta authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line surface: generate, train, eval, predict, experiment-dots.
// Exit codes: 0 success, 2 usage, 3 data validation, 4 numeric failure.
// Every failure path prints a single line with a greppable `error[...]:`
// prefix on stderr.

#pragma once

#include <string>
#include <vector>

namespace nuqta {

int run_cli(const std::vector<std::string>& args);

}  // namespace nuqta
