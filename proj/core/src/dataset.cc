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

#include "pacvi/dataset.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "pacvi/errors.h"
#include "pacvi/random.h"

namespace pacvi {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format double");
  return std::string(buf, end);
}

void Dataset::add_row(std::span<const double> x, std::span<const double> a,
                      int episode_id) {
  if (empty() && inputs.empty()) {
    if (input_dim == 0) input_dim = x.size();
    if (output_dim == 0) output_dim = a.size();
  }
  if (x.size() != input_dim || a.size() != output_dim) {
    throw DimensionError("dataset row has dims (" + std::to_string(x.size()) +
                         "," + std::to_string(a.size()) + "), expected (" +
                         std::to_string(input_dim) + "," +
                         std::to_string(output_dim) + ")");
  }
  inputs.insert(inputs.end(), x.begin(), x.end());
  actions.insert(actions.end(), a.begin(), a.end());
  episode.push_back(episode_id);
}

void Dataset::validate() const {
  if (input_dim == 0 || output_dim == 0) {
    throw ContractError("dataset dimensions must be >= 1");
  }
  if (inputs.size() % input_dim != 0 ||
      actions.size() != size() * output_dim) {
    throw DimensionError("dataset arrays disagree with declared dimensions");
  }
  if (!episode.empty() && episode.size() != size()) {
    throw DimensionError("dataset episode ids disagree with row count");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.input_dim = input_dim;
  out.output_dim = output_dim;
  out.inputs.reserve(rows.size() * input_dim);
  out.actions.reserve(rows.size() * output_dim);
  out.episode.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw ContractError("subset row out of range");
    auto x = input(r);
    auto a = action(r);
    out.inputs.insert(out.inputs.end(), x.begin(), x.end());
    out.actions.insert(out.actions.end(), a.begin(), a.end());
    out.episode.push_back(episode.empty() ? -1 : episode[r]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> minibatch_indices(
    std::size_t rows, std::size_t batches, std::uint64_t seed,
    std::uint64_t epoch) {
  if (batches < 1) throw ContractError("number of minibatches must be >= 1");
  if (rows < batches) {
    throw ContractError("cannot split " + std::to_string(rows) +
                        " rows into " + std::to_string(batches) +
                        " minibatches");
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_stream(seed, StreamPurpose::kShuffle, {epoch});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t chunk = rows / batches;
  std::vector<std::vector<std::size_t>> out(batches);
  for (std::size_t j = 0; j < batches; ++j) {
    const std::size_t begin = j * chunk;
    const std::size_t end = j + 1 == batches ? rows : begin + chunk;
    out[j].assign(order.begin() + begin, order.begin() + end);
  }
  return out;
}

DatasetSplit split_by_episode(const Dataset& data, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractError("train fraction must lie in (0, 1)");
  }
  std::vector<int> order;
  for (int e : data.episode) {
    if (std::find(order.begin(), order.end(), e) == order.end()) {
      order.push_back(e);
    }
  }
  if (order.size() < 2) {
    throw ContractError("episode split needs at least two episodes");
  }
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(order.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  const std::set<int> train_eps(order.begin(), order.begin() + n_train);

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t r = 0; r < data.size(); ++r) {
    (train_eps.count(data.episode[r]) ? train_rows : val_rows).push_back(r);
  }
  return {data.subset(train_rows), data.subset(val_rows)};
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (std::size_t i = 0; i < data.input_dim; ++i) {
    if (i) out += ',';
    out += "x_" + std::to_string(i);
  }
  for (std::size_t i = 0; i < data.output_dim; ++i) {
    out += ",a_" + std::to_string(i);
  }
  out += '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto x = data.input(r);
    auto a = data.action(r);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) out += ',';
      out += format_double(x[i]);
    }
    for (double v : a) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  // Lines starting with '#' carry run metadata and are skipped.
  do {
    if (!std::getline(is, line)) throw InputError("dataset CSV is empty");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  } while (!line.empty() && line[0] == '#');
  const auto header = split_fields(line);

  Dataset data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    const bool is_x = h == "x_" + std::to_string(data.input_dim);
    const bool is_a = h == "a_" + std::to_string(data.output_dim);
    if (is_x && data.output_dim == 0) {
      ++data.input_dim;
    } else if (is_a && data.input_dim > 0) {
      ++data.output_dim;
    } else {
      throw InputError("dataset CSV header: unexpected column " +
                       std::to_string(c) + " '" + h + "'");
    }
  }
  if (data.input_dim == 0 || data.output_dim == 0) {
    throw InputError("dataset CSV header needs x_ and a_ columns");
  }

  const std::size_t width = data.input_dim + data.output_dim;
  std::vector<double> row(width);
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw InputError("dataset CSV line " + std::to_string(line_no) + ": " +
                       std::to_string(fields.size()) + " columns, expected " +
                       std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& f = fields[c];
      double v = 0.0;
      auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || end != f.data() + f.size() ||
          !std::isfinite(v)) {
        throw InputError("dataset CSV line " + std::to_string(line_no) +
                         ", column " + std::to_string(c) + " (" + header[c] +
                         "): cannot parse '" + f + "'");
      }
      row[c] = v;
    }
    data.add_row(std::span(row).first(data.input_dim),
                 std::span(row).subspan(data.input_dim));
  }
  if (data.empty()) throw InputError("dataset CSV has no rows");
  return data;
}

void write_dataset_csv(const std::filesystem::path& path,
                       const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << dataset_to_csv(data);
  if (!out) throw InputError("failed writing " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return dataset_from_csv(ss.str());
}

std::string dataset_fingerprint(const Dataset& data) {
  const std::string text = dataset_to_csv(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pacvi
