#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlmkit/checkpoint.hpp"
#include "mlmkit/mlm_data.hpp"
#include "mlmkit/optimizer.hpp"
#include "mlmkit/transformer.hpp"

namespace mlmkit {

struct PretrainOptions {
  ModelConfig model;
  AdamConfig adam;
  MaskingConfig masking;
  int micro_batch = 16;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  std::uint64_t vocab_hash = 0;
  std::int64_t checkpoint_every = 0;  // 0 = final checkpoint only
  std::int64_t stop_after_step = 0;   // 0 = run to total_steps
  std::string out_dir;                // empty = keep everything in memory
  bool resume = false;                // continue from out_dir/train_state.mlmt
  std::function<void(const std::string&)> log;  // optional progress sink
};

struct LossPoint {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct PretrainResult {
  Parameters params;
  AdamState state;
  double initial_loss = 0.0;  // first micro-batch, before any update
  double final_loss = 0.0;    // mean loss of the last optimizer step
  std::vector<LossPoint> curve;
  std::string checkpoint_path;  // empty when out_dir is empty
};

// MLM training: per optimizer step, gradients are summed over `accumulation`
// micro-batches and divided by the accumulation count, clipped, then applied
// with the warmup/decay schedule. Sequences are re-shuffled and re-masked
// every epoch; the whole schedule of batches, masks, and dropout is a pure
// function of (seed, step), so resuming from the sidecar is exact.
PretrainResult train_mlm(const std::vector<std::vector<int>>& sequences,
                         const PretrainOptions& opt);

}  // namespace mlmkit
