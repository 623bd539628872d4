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

#include "cli_config.h"

#include <algorithm>
#include <cctype>
#include <string_view>

#include "pacvi/errors.h"
#include "pacvi/serialization.h"

namespace pacvi::cli {
namespace {

std::string trim(const std::string& s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto b = std::find_if(s.begin(), s.end(), not_space);
  auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return b < e ? std::string(b, e) : std::string();
}

}  // namespace

ConfigEntries parse_config_text(const std::string& text) {
  ConfigEntries out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) +
                       ": expected key=value, got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(0, 1);
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw InputError("config line " + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

ConfigEntries config_entries_from_text(const std::string& text) {
  constexpr std::string_view kPrefix = "# pacvi-config ";
  std::string json_text;
  if (text.rfind(kPrefix, 0) == 0) {
    json_text = text.substr(kPrefix.size(), text.find('\n') - kPrefix.size());
  } else if (!text.empty() && text.front() == '{') {
    json_text = Json::accept(text) ? text : text.substr(0, text.find('\n'));
  } else {
    return parse_config_text(text);
  }
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("config file is not valid JSON: ") + e.what());
  }
  const Json* flags = nullptr;
  if (j.contains("config") && j["config"].contains("flags")) {
    flags = &j["config"]["flags"];
  } else if (j.contains("flags")) {
    flags = &j["flags"];
  }
  if (flags == nullptr || !flags->is_object()) {
    throw InputError("config file has no embedded flags");
  }
  ConfigEntries out;
  for (const auto& [k, v] : flags->items()) {
    out.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
  }
  return out;
}

std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::vector<std::string> files;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InputError("--config needs a file name");
      files.push_back(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      files.push_back(args[i].substr(9));
    } else {
      rest.push_back(args[i]);
    }
  }
  if (files.empty()) return rest;

  std::vector<std::string> injected;
  for (const auto& f : files) {
    std::string text;
    try {
      text = read_text_file(f);
    } catch (const InputError&) {
      throw InputError("cannot read config file " + f);
    }
    for (const auto& [k, v] : config_entries_from_text(text)) {
      injected.push_back("--" + k + "=" + v);
    }
  }
  std::size_t words = 0;
  while (words < rest.size() && !rest[words].empty() && rest[words][0] != '-') {
    ++words;
  }
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(words),
              injected.begin(), injected.end());
  return rest;
}

}  // namespace pacvi::cli
