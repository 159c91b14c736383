#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlmkit/bpe.hpp"

namespace mlmkit {

// Label value for positions the MLM loss must ignore.
inline constexpr int kIgnoreLabel = -1;

struct MaskingConfig {
  double p_select = 0.15;
  double p_mask = 0.8;
  double p_random = 0.1;
  double p_keep = 0.1;
  std::size_t max_len = 512;
  std::uint64_t seed = 0;

  void validate() const;  // throws DataError when probabilities are invalid
};

struct MaskedBatch {
  // Row-major [B][T]; every row in a batch has equal length (right-padded).
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> labels;      // original id or kIgnoreLabel
  std::vector<std::vector<bool>> attention;  // false at padding
  std::vector<std::vector<int>> positions;   // 0..T-1 per row

  std::size_t rows() const { return inputs.size(); }
  std::size_t cols() const { return inputs.empty() ? 0 : inputs[0].size(); }
};

// BOS + ids + EOS, truncated at max_len; empty sentences are skipped, long
// sentences are truncated rather than split.
std::vector<std::vector<int>> pack_sequences(
    const std::vector<std::vector<int>>& encoded, std::size_t max_len);

struct MaskedRow {
  std::vector<int> input;
  std::vector<int> labels;
};

// Independent per-position corruption: non-special positions are selected
// with p_select and then masked / replaced by a random non-special id / kept
// with p_mask / p_random / p_keep. The stream is derived from
// (seed, epoch, row), so every epoch re-rolls the corruption.
MaskedRow dynamic_mask(const std::vector<int>& sequence,
                       const MaskingConfig& cfg, int vocab_size,
                       std::uint64_t epoch, std::uint64_t row);

// Consecutive groups of batch_size rows, right-padded to the longest row.
// Row rng index is the global sequence index, so masks do not depend on the
// batch size.
std::vector<MaskedBatch> make_batches(
    const std::vector<std::vector<int>>& sequences, std::size_t batch_size,
    const MaskingConfig& cfg, int vocab_size, std::uint64_t epoch);

// One batch rendered as JSON for debugging.
std::string batch_to_json(const MaskedBatch& batch);

}  // namespace mlmkit
