#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mlmkit/transformer.hpp"

namespace mlmkit {

// Public model file: "MLMF" magic, format version, JSON header (model config,
// vocabulary hash, training step), then length-prefixed little-endian float32
// tensors in the fixed parameter inventory order.
struct Checkpoint {
  Parameters params;
  std::uint64_t vocab_hash = 0;
  std::uint64_t step = 0;
};

void save_checkpoint(const std::string& path, const Parameters& params,
                     std::uint64_t vocab_hash, std::uint64_t step);
Checkpoint load_checkpoint(const std::string& path);

// Header JSON without reading the tensor payload.
nlohmann::json checkpoint_info(const std::string& path);

// Training-state sidecar ("MLMT"): full-precision parameters plus both Adam
// moment sets, so an interrupted run resumes to bit-identical results. The
// data order and masking are derived from (seed, step), never from live RNG
// state, which keeps this file self-sufficient.
struct TrainState {
  Parameters params;
  Parameters m;
  Parameters v;
  std::uint64_t step = 0;
};

void save_train_state(const std::string& path, const TrainState& state);
TrainState load_train_state(const std::string& path);

}  // namespace mlmkit
