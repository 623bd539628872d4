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

#include "pacvi/trainer.h"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "pacvi/errors.h"
#include "pacvi/pac_bound.h"

namespace pacvi {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

ParamNamer variational_namer(const NetworkArch& arch) {
  return [blocks = arch.blocks(), n = arch.parameter_count()](std::size_t i) {
    const char* part = i < n ? "mu" : "rho";
    const std::size_t k = i % n;
    for (const auto& b : blocks) {
      if (k >= b.offset && k < b.offset + b.size()) {
        return std::string(part) + ":" + b.name;
      }
    }
    return std::string(part) + ":?";
  };
}

ParamNamer weight_namer(const NetworkArch& arch) {
  return [blocks = arch.blocks()](std::size_t i) {
    for (const auto& b : blocks) {
      if (i >= b.offset && i < b.offset + b.size()) return b.name;
    }
    return std::string("?");
  };
}

struct MseGradient {
  double value = 0.0;
  std::vector<double> grad;
};

MseGradient mse_gradient(const Dataset& data, std::span<const double> w,
                         const NetworkArch& arch) {
  const auto blocks = arch.blocks();
  Tape tape;
  std::vector<NodeId> nodes;
  for (const auto& b : blocks) {
    std::vector<double> v(w.begin() + b.offset, w.begin() + b.offset + b.size());
    nodes.push_back(tape.leaf(b.is_bias ? Tensor::vector(std::move(v))
                                        : Tensor::matrix(b.rows, b.cols,
                                                         std::move(v))));
  }
  const NodeId x = tape.constant(
      Tensor::matrix(data.size(), data.input_dim, data.inputs));
  const NodeId a = tape.constant(
      Tensor::matrix(data.size(), data.output_dim, data.actions));
  const NodeId pred = tape_policy_forward(tape, x, nodes, arch);
  const NodeId loss = tape.scale(tape.sum(tape.square(tape.sub(a, pred))),
                                 1.0 / static_cast<double>(data.size()));
  const Gradients g = tape.backward(loss);
  MseGradient out;
  out.value = tape.value(loss).item();
  out.grad.assign(w.size(), 0.0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Tensor& gk = g[nodes[k]];
    for (std::size_t i = 0; i < gk.size(); ++i) {
      out.grad[blocks[k].offset + i] = gk[i];
    }
  }
  return out;
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, const ParamNamer& namer) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("adam_step: params " + std::to_string(params.size()) +
                         ", grads " + std::to_string(grads.size()) +
                         ", moments " + std::to_string(state.m.size()));
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient in parameter block " +
                         (namer ? namer(i) : std::string("params")) +
                         " at index " + std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] =
        state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

std::vector<double> TrainTrace::costs() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.cost);
  return out;
}

std::vector<double> TrainTrace::bounds() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.bound);
  return out;
}

std::vector<double> TrainTrace::epoch_mean_costs() const {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < records.size()) {
    const std::size_t epoch = records[i].epoch;
    double sum = 0.0;
    std::size_t n = 0;
    for (; i < records.size() && records[i].epoch == epoch; ++i, ++n) {
      sum += records[i].cost;
    }
    out.push_back(sum / static_cast<double>(n));
  }
  return out;
}

std::string trace_record_csv(const TraceRecord& r) {
  return std::to_string(r.epoch) + "," + std::to_string(r.batch) + "," +
         format_double(r.cost) + "," + format_double(r.bound) + "," +
         format_double(r.wallclock_ms) + "\n";
}

std::string trace_to_csv(const TrainTrace& trace) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& r : trace.records) out += trace_record_csv(r);
  return out;
}

TrainTrace trace_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  bool ok = false;
  while ((ok = static_cast<bool>(std::getline(is, line)))) {
    ++line_no;
    if (line.empty() || line[0] != '#') break;
  }
  if (!ok || line != kTraceHeader) {
    throw InputError(std::string("trace CSV must start with header '") +
                     kTraceHeader + "'");
  }
  TrainTrace trace;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TraceRecord r;
    char c1, c2, c3, c4;
    if (!(ls >> r.epoch >> c1 >> r.batch >> c2 >> r.cost >> c3 >> r.bound >>
          c4 >> r.wallclock_ms) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw InputError("trace CSV line " + std::to_string(line_no) +
                       " is malformed");
    }
    trace.records.push_back(r);
  }
  return trace;
}

TraceWriter::TraceWriter(std::ostream& out, std::size_t flush_every)
    : out_(out), flush_every_(flush_every == 0 ? 1 : flush_every) {
  out_ << kTraceHeader << '\n';
}

void TraceWriter::write(const TraceRecord& record) {
  out_ << trace_record_csv(record);
  if (++pending_ >= flush_every_) flush();
}

void TraceWriter::flush() {
  out_.flush();
  pending_ = 0;
}

TrainResult train(const Dataset& data, const NetworkArch& arch,
                  const Hyperparams& h, const TrainOptions& options) {
  h.validate();
  data.validate();
  if (data.size() < h.batches) {
    throw ContractError("dataset has " + std::to_string(data.size()) +
                        " rows, fewer than " + std::to_string(h.batches) +
                        " minibatches");
  }

  TrainResult result;
  result.initial = options.initial != nullptr
                       ? *options.initial
                       : VariationalParams::initialize(arch, h.seed);
  result.initial.validate();
  if (result.initial.arch != arch) {
    throw ContractError("initial parameters do not match the architecture");
  }
  result.params = result.initial;

  VariationalParams& phi = result.params;
  const std::size_t n = phi.size();
  std::vector<double> flat(2 * n);
  std::vector<double> grad(2 * n);
  AdamState adam(2 * n);
  const ParamNamer namer = variational_namer(arch);
  const auto start = std::chrono::steady_clock::now();

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < h.epochs; ++epoch) {
    const auto batches = minibatch_indices(data.size(), h.batches, h.seed, epoch);
    for (std::size_t j = 1; j <= h.batches; ++j, ++step) {
      const Dataset batch = data.subset(batches[j - 1]);
      const auto noise = draw_noise_set(n, h.mc_samples, h.seed,
                                        StreamPurpose::kTrainNoise, step);
      CostGradient cg;
      try {
        cg = mc_cost_gradient(batch, phi, h.beta, minibatch_weight(j, h.batches),
                              noise);
      } catch (const NumericError& e) {
        result.status = TrainStatus::kDiverged;
        result.message = "epoch " + std::to_string(epoch) + " batch " +
                         std::to_string(j) + ": " + e.what();
        return result;
      }
      std::copy(cg.grad_mu.begin(), cg.grad_mu.end(), grad.begin());
      std::copy(cg.grad_rho.begin(), cg.grad_rho.end(), grad.begin() + n);
      if (!std::isfinite(cg.value) || !all_finite(grad)) {
        result.status = TrainStatus::kDiverged;
        result.message = "non-finite cost or gradient at epoch " +
                         std::to_string(epoch) + " batch " + std::to_string(j);
        return result;
      }

      TraceRecord rec;
      rec.epoch = epoch;
      rec.batch = j;
      rec.rows = batch.size();
      rec.cost = cg.value;
      rec.bound = affine_from_cost(cg.value, batch.size(), h);
      if (options.record_wallclock) {
        rec.wallclock_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count();
      }
      result.trace.records.push_back(rec);
      if (options.writer != nullptr) options.writer->write(rec);

      clip_global_norm(grad, h.clip_norm);
      std::copy(phi.mu.begin(), phi.mu.end(), flat.begin());
      std::copy(phi.rho.begin(), phi.rho.end(), flat.begin() + n);
      adam_step(flat, grad, adam, h.learning_rate, namer);
      if (!all_finite(flat)) {
        result.status = TrainStatus::kDiverged;
        result.message = "parameters became non-finite at epoch " +
                         std::to_string(epoch) + " batch " + std::to_string(j);
        return result;
      }
      std::copy(flat.begin(), flat.begin() + n, phi.mu.begin());
      std::copy(flat.begin() + n, flat.end(), phi.rho.begin());
    }
  }
  if (options.writer != nullptr) options.writer->flush();
  return result;
}

double mean_squared_error(const Dataset& data, std::span<const double> w,
                          const NetworkArch& arch) {
  if (data.empty()) throw ContractError("mean_squared_error: empty dataset");
  const auto pred = policy_forward_batch(data.inputs, data.size(), w, arch);
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = data.actions[i] - pred[i];
    sq += r * r;
  }
  return sq / static_cast<double>(data.size());
}

BaselineResult train_baseline(const Dataset& data, const NetworkArch& arch,
                              double lr, std::size_t epochs,
                              std::uint64_t seed, std::size_t batches,
                              double clip_norm) {
  data.validate();
  if (data.size() < batches) {
    throw ContractError("dataset has fewer rows than minibatches");
  }
  if (!(lr > 0.0)) throw ContractError("learning rate must be > 0");

  BaselineResult result;
  result.initial = VariationalParams::initialize(arch, seed).mu;
  result.weights = result.initial;
  AdamState adam(result.weights.size());
  const ParamNamer namer = weight_namer(arch);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto idx = minibatch_indices(data.size(), batches, seed, epoch);
    double epoch_sum = 0.0;
    for (const auto& rows : idx) {
      const Dataset batch = data.subset(rows);
      MseGradient g;
      try {
        g = mse_gradient(batch, result.weights, arch);
      } catch (const NumericError& e) {
        result.status = TrainStatus::kDiverged;
        result.message = e.what();
        return result;
      }
      if (!std::isfinite(g.value) || !all_finite(g.grad)) {
        result.status = TrainStatus::kDiverged;
        result.message = "non-finite loss at epoch " + std::to_string(epoch);
        return result;
      }
      epoch_sum += g.value;
      clip_global_norm(g.grad, clip_norm);
      adam_step(result.weights, g.grad, adam, lr, namer);
    }
    result.epoch_mse.push_back(epoch_sum / static_cast<double>(batches));
  }
  return result;
}

}  // namespace pacvi
