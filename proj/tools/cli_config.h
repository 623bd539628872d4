// Copyright 2026 The pacvi Authors
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

// Flat key=value configuration files for the command-line tool.

#ifndef PACVI_TOOLS_CLI_CONFIG_H_
#define PACVI_TOOLS_CLI_CONFIG_H_

#include <string>
#include <utility>
#include <vector>

namespace pacvi::cli {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

// Parses "key = value" lines. Blank lines and lines starting with '#' are
// ignored; keys may be written with or without leading dashes. Throws
// InputError naming the line on malformed input.
ConfigEntries parse_config_text(const std::string& text);

// Config entries from a file's text: either key=value lines or any pacvi
// output that embeds a resolved configuration (JSON report or checkpoint,
// JSONL trajectories, or CSV with a "# pacvi-config" first line). For the
// latter the entries come from the embedded "flags" object.
ConfigEntries config_entries_from_text(const std::string& text);

// Removes every "--config FILE" / "--config=FILE" from args (program name
// excluded) and splices the file's entries in as "--key=value" right after
// the leading subcommand words, so flags given on the command line still
// win when options keep their last value.
std::vector<std::string> expand_config_args(std::vector<std::string> args);

}  // namespace pacvi::cli

#endif  // PACVI_TOOLS_CLI_CONFIG_H_
