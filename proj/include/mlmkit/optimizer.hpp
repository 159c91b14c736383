#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mlmkit/common.hpp"
#include "mlmkit/transformer.hpp"

namespace mlmkit {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
  double peak_lr = 6e-4;
  std::int64_t warmup_steps = 24'000;
  std::int64_t total_steps = 224'000;
  int accumulation = 16;

  void validate() const;
};

// Moment estimates mirror the parameter inventory; `step` counts optimizer
// updates, not micro-batches.
struct AdamState {
  std::uint64_t step = 0;
  Parameters m;
  Parameters v;

  static AdamState zeros(const ModelConfig& cfg);
};

struct LrSchedule {
  std::int64_t warmup_steps = 0;
  double peak_lr = 0.0;
  std::int64_t total_steps = 0;
};

// Linear ramp 0 -> peak over the warmup, then linear decay peak -> 0 at
// total_steps. Steps outside [0, total_steps] are an error.
double lr_at_step(const LrSchedule& sched, std::int64_t step);

// Bias-corrected Adam with decoupled weight decay. Decay touches weight
// matrices only; biases and norm parameters are excluded. Gradients must be
// finite or the step aborts naming the offending tensor.
void adam_step(Parameters& params, const Parameters& grads, AdamState& state,
               const AdamConfig& cfg, double lr);

// Euclidean norm over every gradient entry, all tensors together.
double global_grad_norm(const Parameters& grads);

// Scales gradients in place so the global norm is at most `max_norm`.
// Returns the pre-clip norm. No-op when max_norm <= 0.
double clip_global_norm(Parameters& grads, double max_norm);

// The same update for any tensor pack exposing the for_each_tensor
// inventory protocol (task heads use this with their own packs). `step`
// must already count this update.
template <class Pack>
void adam_step_pack(Pack& params, const Pack& grads, std::uint64_t step,
                    Pack& m, Pack& v, const AdamConfig& cfg, double lr) {
  grads.for_each_tensor([&](const std::string& name, bool, const auto& g) {
    if (!g.allFinite())
      throw NumericError("adam step: non-finite gradient in tensor " + name);
  });

  double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
  double bc2 = 1.0 - std::pow(cfg.beta2, double(step));

  struct Slot {
    bool is_matrix;
    const double* g;
    double* p;
    double* m;
    double* v;
    Eigen::Index n;
  };
  // The four packs share one inventory order, so zipping the visitations
  // pairs tensors correctly.
  std::vector<Slot> slots;
  params.for_each_tensor([&](const std::string&, bool is_matrix, auto& t) {
    slots.push_back(
        Slot{is_matrix, nullptr, t.data(), nullptr, nullptr, t.size()});
  });
  std::size_t i = 0;
  grads.for_each_tensor([&](const std::string&, bool, const auto& t) {
    slots[i++].g = t.data();
  });
  i = 0;
  m.for_each_tensor(
      [&](const std::string&, bool, auto& t) { slots[i++].m = t.data(); });
  i = 0;
  v.for_each_tensor(
      [&](const std::string&, bool, auto& t) { slots[i++].v = t.data(); });

  for (const Slot& s : slots) {
    for (Eigen::Index k = 0; k < s.n; ++k) {
      double g = s.g[k];
      s.m[k] = cfg.beta1 * s.m[k] + (1.0 - cfg.beta1) * g;
      s.v[k] = cfg.beta2 * s.v[k] + (1.0 - cfg.beta2) * g * g;
      double mhat = s.m[k] / bc1;
      double vhat = s.v[k] / bc2;
      double update = lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
      if (s.is_matrix) update += lr * cfg.weight_decay * s.p[k];
      s.p[k] -= update;
    }
  }
}

template <class Pack>
double pack_squared_norm(const Pack& grads) {
  double sq = 0.0;
  grads.for_each_tensor([&](const std::string&, bool, const auto& t) {
    sq += t.array().square().sum();
  });
  return sq;
}

template <class Pack>
void pack_scale(Pack& grads, double factor) {
  grads.for_each_tensor(
      [&](const std::string&, bool, auto& t) { t *= factor; });
}

}  // namespace mlmkit
