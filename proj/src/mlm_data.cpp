#include "mlmkit/mlm_data.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "mlmkit/common.hpp"

namespace mlmkit {

namespace {

bool is_special(int id) { return id >= 0 && id < BpeVocab::kNumSpecials; }

}  // namespace

void MaskingConfig::validate() const {
  if (p_select < 0.0 || p_select > 1.0)
    throw DataError("masking config: p_select outside [0,1]");
  for (double p : {p_mask, p_random, p_keep})
    if (p < 0.0 || p > 1.0)
      throw DataError("masking config: corruption probabilities outside [0,1]");
  if (std::abs(p_mask + p_random + p_keep - 1.0) > 1e-9)
    throw DataError("masking config: p_mask + p_random + p_keep must equal 1");
  if (max_len < 8) throw DataError("masking config: max_len must be at least 8");
}

std::vector<std::vector<int>> pack_sequences(
    const std::vector<std::vector<int>>& encoded, std::size_t max_len) {
  if (max_len < 8) throw DataError("pack_sequences: max_len must be at least 8");
  std::vector<std::vector<int>> packed;
  packed.reserve(encoded.size());
  for (const auto& ids : encoded) {
    if (ids.empty()) continue;
    std::vector<int> row;
    row.reserve(std::min(ids.size() + 2, max_len));
    row.push_back(BpeVocab::kBos);
    std::size_t body = std::min(ids.size(), max_len - 2);
    row.insert(row.end(), ids.begin(), ids.begin() + body);
    row.push_back(BpeVocab::kEos);
    packed.push_back(std::move(row));
  }
  return packed;
}

MaskedRow dynamic_mask(const std::vector<int>& sequence,
                       const MaskingConfig& cfg, int vocab_size,
                       std::uint64_t epoch, std::uint64_t row) {
  if (vocab_size <= BpeVocab::kNumSpecials)
    throw DataError("dynamic_mask: vocabulary holds no maskable ids");
  std::mt19937_64 rng(mix64(cfg.seed, epoch, row));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> random_id(BpeVocab::kNumSpecials,
                                               vocab_size - 1);

  MaskedRow out;
  out.input = sequence;
  out.labels.assign(sequence.size(), kIgnoreLabel);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (is_special(sequence[i])) continue;
    if (unit(rng) >= cfg.p_select) continue;
    out.labels[i] = sequence[i];
    double action = unit(rng);
    if (action < cfg.p_mask) {
      out.input[i] = BpeVocab::kMask;
    } else if (action < cfg.p_mask + cfg.p_random) {
      out.input[i] = random_id(rng);
    }  // else keep the original id
  }
  return out;
}

std::vector<MaskedBatch> make_batches(
    const std::vector<std::vector<int>>& sequences, std::size_t batch_size,
    const MaskingConfig& cfg, int vocab_size, std::uint64_t epoch) {
  if (batch_size == 0) throw DataError("make_batches: batch_size must be ≥ 1");
  cfg.validate();
  std::vector<MaskedBatch> batches;
  for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
    std::size_t end = std::min(start + batch_size, sequences.size());
    std::size_t width = 0;
    for (std::size_t r = start; r < end; ++r)
      width = std::max(width, sequences[r].size());

    MaskedBatch batch;
    for (std::size_t r = start; r < end; ++r) {
      MaskedRow row = dynamic_mask(sequences[r], cfg, vocab_size, epoch, r);
      std::vector<bool> attend(width, false);
      std::vector<int> pos(width);
      for (std::size_t i = 0; i < width; ++i) pos[i] = static_cast<int>(i);
      std::fill(attend.begin(), attend.begin() + sequences[r].size(), true);
      row.input.resize(width, BpeVocab::kPad);
      row.labels.resize(width, kIgnoreLabel);
      batch.inputs.push_back(std::move(row.input));
      batch.labels.push_back(std::move(row.labels));
      batch.attention.push_back(std::move(attend));
      batch.positions.push_back(std::move(pos));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::string batch_to_json(const MaskedBatch& batch) {
  nlohmann::json j;
  j["inputs"] = batch.inputs;
  j["labels"] = batch.labels;
  j["positions"] = batch.positions;
  std::vector<std::vector<int>> attend;
  for (const auto& row : batch.attention)
    attend.emplace_back(row.begin(), row.end());
  j["attention"] = attend;
  return j.dump(2);
}

}  // namespace mlmkit
