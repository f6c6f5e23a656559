// Copyright 2026 The pcnflow Authors
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

#ifndef PCNFLOW_TEXT_HPP_
#define PCNFLOW_TEXT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pcnflow {

// Helpers for the line-delimited comma-separated formats used by all file
// interfaces (snapshots, belief stores, flows, scripts, study tables).
// Lines starting with '#' and blank lines are skipped by callers.

std::string trim(std::string_view s);
std::vector<std::string> split_csv(std::string_view line);

// Parses a signed integer field; throws ParseError with `context` on junk.
std::int64_t parse_int(std::string_view field, const std::string& context);
double parse_double(std::string_view field, const std::string& context);

// Formats a double with 6 significant digits (the table convention).
std::string format_g6(double v);

}  // namespace pcnflow

#endif  // PCNFLOW_TEXT_HPP_
