#include "mlmkit/optimizer.hpp"

#include <cmath>

#include "mlmkit/common.hpp"

namespace mlmkit {

void AdamConfig::validate() const {
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw DataError("adam config: betas must lie in [0,1)");
  if (epsilon <= 0.0) throw DataError("adam config: epsilon must be positive");
  if (weight_decay < 0.0)
    throw DataError("adam config: negative weight decay");
  if (peak_lr < 0.0) throw DataError("adam config: negative peak_lr");
  if (warmup_steps < 0 || total_steps < 0 || warmup_steps > total_steps)
    throw DataError("adam config: warmup_steps must not exceed total_steps");
  if (accumulation < 1)
    throw DataError("adam config: accumulation must be at least 1");
}

AdamState AdamState::zeros(const ModelConfig& cfg) {
  AdamState s;
  s.m = Parameters::zeros(cfg);
  s.v = Parameters::zeros(cfg);
  return s;
}

double lr_at_step(const LrSchedule& sched, std::int64_t step) {
  if (step < 0 || step > sched.total_steps)
    throw DataError("lr schedule: step " + std::to_string(step) +
                    " outside [0, " + std::to_string(sched.total_steps) + "]");
  if (step <= sched.warmup_steps) {
    if (sched.warmup_steps == 0) return sched.peak_lr;
    return sched.peak_lr * double(step) / double(sched.warmup_steps);
  }
  std::int64_t decay_span = sched.total_steps - sched.warmup_steps;
  return sched.peak_lr * double(sched.total_steps - step) / double(decay_span);
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state,
               const AdamConfig& cfg, double lr) {
  cfg.validate();
  if (lr < 0.0) throw DataError("adam step: negative learning rate");
  adam_step_pack(params, grads, state.step + 1, state.m, state.v, cfg, lr);
  state.step += 1;
}

double global_grad_norm(const Parameters& grads) {
  return std::sqrt(pack_squared_norm(grads));
}

double clip_global_norm(Parameters& grads, double max_norm) {
  double norm = global_grad_norm(grads);
  if (max_norm <= 0.0 || norm <= max_norm) return norm;
  pack_scale(grads, max_norm / norm);
  return norm;
}

}  // namespace mlmkit
