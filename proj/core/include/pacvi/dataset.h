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

#ifndef PACVI_DATASET_H_
#define PACVI_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pacvi {

// N (input, action) pairs stored as two row-major matrices. Episode ids are
// optional and only kept in memory; the CSV format does not carry them.
struct Dataset {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<double> inputs;
  std::vector<double> actions;
  std::vector<int> episode;

  std::size_t size() const { return input_dim ? inputs.size() / input_dim : 0; }
  bool empty() const { return size() == 0; }

  std::span<const double> input(std::size_t row) const {
    return {inputs.data() + row * input_dim, input_dim};
  }
  std::span<const double> action(std::size_t row) const {
    return {actions.data() + row * output_dim, output_dim};
  }

  void add_row(std::span<const double> x, std::span<const double> a,
               int episode_id = -1);
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Row indices of each minibatch for one epoch: a seeded shuffle of 0..N-1
// split into `batches` contiguous chunks of N / batches rows, the remainder
// going to the last chunk.
std::vector<std::vector<std::size_t>> minibatch_indices(
    std::size_t rows, std::size_t batches, std::uint64_t seed,
    std::uint64_t epoch);

// Splits by episode id: the first `train_fraction` of the distinct episodes
// (in order of first appearance) form the training set.
struct DatasetSplit {
  Dataset train;
  Dataset validation;
};
DatasetSplit split_by_episode(const Dataset& data, double train_fraction);

std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

// FNV-1a over the CSV rendering; used as a provenance fingerprint.
std::string dataset_fingerprint(const Dataset& data);

std::string format_double(double v);

}  // namespace pacvi

#endif  // PACVI_DATASET_H_
