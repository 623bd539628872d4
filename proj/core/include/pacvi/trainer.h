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

#ifndef PACVI_TRAINER_H_
#define PACVI_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pacvi/dataset.h"
#include "pacvi/objective.h"
#include "pacvi/variational_net.h"

namespace pacvi {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Maps a flat parameter index to a human-readable block name for errors.
using ParamNamer = std::function<std::string(std::size_t)>;

// One bias-corrected Adam update in place. Throws NumericError naming the
// offending parameter block if any gradient entry is non-finite; params are
// left untouched in that case.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, const ParamNamer& namer = {});

// Scales `grads` so its Euclidean norm is at most max_norm. Returns the norm
// before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;  // 1-based minibatch position j
  std::size_t rows = 0;   // |D_j|
  double cost = 0.0;      // F(D_j)
  double bound = 0.0;     // F(D_j)/|D_j| + log(1/delta)/|D_j| + beta/2
  double wallclock_ms = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;

  std::vector<double> costs() const;
  std::vector<double> bounds() const;
  // Mean of cost over each epoch's minibatches.
  std::vector<double> epoch_mean_costs() const;
};

inline constexpr const char* kTraceHeader = "epoch,batch,cost,bound,wallclock_ms";

std::string trace_record_csv(const TraceRecord& r);
std::string trace_to_csv(const TrainTrace& trace);
TrainTrace trace_from_csv(const std::string& text);

// Streams records to a CSV file, flushing every `flush_every` records.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out, std::size_t flush_every = 50);
  void write(const TraceRecord& record);
  void flush();

 private:
  std::ostream& out_;
  std::size_t flush_every_;
  std::size_t pending_ = 0;
};

enum class TrainStatus { kOk, kDiverged };

struct TrainOptions {
  bool record_wallclock = false;  // off keeps trace files reproducible
  TraceWriter* writer = nullptr;
  // Variational parameters to start from; initialized from h.seed if empty.
  const VariationalParams* initial = nullptr;
};

struct TrainResult {
  VariationalParams initial;
  VariationalParams params;  // last finite parameters
  TrainTrace trace;
  TrainStatus status = TrainStatus::kOk;
  std::string message;
};

// Adam on the theta-weighted minibatch cost, one step per minibatch, for
// h.epochs epochs of h.batches minibatches.
TrainResult train(const Dataset& data, const NetworkArch& arch,
                  const Hyperparams& h, const TrainOptions& options = {});

struct BaselineResult {
  std::vector<double> initial;
  std::vector<double> weights;
  std::vector<double> epoch_mse;
  TrainStatus status = TrainStatus::kOk;
  std::string message;
};

// Deterministic MLP fitted to the mean squared action error with Adam; no
// weight noise and no regularization. Shares the initialization of
// VariationalParams::initialize(arch, seed).mu.
BaselineResult train_baseline(const Dataset& data, const NetworkArch& arch,
                              double lr, std::size_t epochs,
                              std::uint64_t seed, std::size_t batches = 20,
                              double clip_norm = 100.0);

// Mean over rows of |a - f_w(x)|^2.
double mean_squared_error(const Dataset& data, std::span<const double> w,
                          const NetworkArch& arch);

}  // namespace pacvi

#endif  // PACVI_TRAINER_H_
