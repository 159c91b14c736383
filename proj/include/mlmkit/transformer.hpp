#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mlmkit/mlm_data.hpp"

namespace mlmkit {

struct ModelConfig {
  int layers = 12;
  int hidden = 768;
  int heads = 12;
  int d_ff = 3072;
  int vocab_size = 0;
  int max_positions = 512;
  double dropout = 0.1;
  bool tie_mlm_head = true;
  bool pre_norm = true;

  void validate() const;  // throws DataError on inconsistent shapes
  static ModelConfig base(int vocab_size);
  static ModelConfig large(int vocab_size);
  static ModelConfig toy(int vocab_size);
};

struct LayerParams {
  Eigen::MatrixXd wq, wk, wv, wo;  // H×H
  Eigen::VectorXd bq, bk, bv, bo;  // H
  Eigen::VectorXd ln1_scale, ln1_shift, ln2_scale, ln2_shift;  // H
  Eigen::MatrixXd w1;  // H×d_ff
  Eigen::VectorXd b1;  // d_ff
  Eigen::MatrixXd w2;  // d_ff×H
  Eigen::VectorXd b2;  // H
};

// Also used for gradients and optimizer moments: same tensor inventory.
struct Parameters {
  ModelConfig cfg;
  Eigen::MatrixXd token_embed;  // V×H
  Eigen::MatrixXd pos_embed;    // P×H
  std::vector<LayerParams> layers;
  Eigen::VectorXd final_ln_scale, final_ln_shift;  // H
  Eigen::VectorXd mlm_bias;  // V
  Eigen::MatrixXd mlm_proj;  // H×V, allocated only when the head is untied

  // Visits every tensor as (name, is_matrix_shaped, Eigen ref) in a fixed
  // inventory order shared by checkpoints, optimizer state, and tests.
  template <class F>
  void for_each_tensor(F&& f) {
    f("token_embed", true, token_embed);
    f("pos_embed", true, pos_embed);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      LayerParams& lp = layers[l];
      f(p + "wq", true, lp.wq);
      f(p + "bq", false, lp.bq);
      f(p + "wk", true, lp.wk);
      f(p + "bk", false, lp.bk);
      f(p + "wv", true, lp.wv);
      f(p + "bv", false, lp.bv);
      f(p + "wo", true, lp.wo);
      f(p + "bo", false, lp.bo);
      f(p + "ln1_scale", false, lp.ln1_scale);
      f(p + "ln1_shift", false, lp.ln1_shift);
      f(p + "ln2_scale", false, lp.ln2_scale);
      f(p + "ln2_shift", false, lp.ln2_shift);
      f(p + "w1", true, lp.w1);
      f(p + "b1", false, lp.b1);
      f(p + "w2", true, lp.w2);
      f(p + "b2", false, lp.b2);
    }
    f("final_ln_scale", false, final_ln_scale);
    f("final_ln_shift", false, final_ln_shift);
    f("mlm_bias", false, mlm_bias);
    if (!cfg.tie_mlm_head) f("mlm_proj", true, mlm_proj);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<Parameters*>(this)->for_each_tensor(
        [&](const std::string& name, bool is_matrix, auto& t) {
          f(name, is_matrix, static_cast<const std::decay_t<decltype(t)>&>(t));
        });
  }

  static Parameters zeros(const ModelConfig& cfg);
};

Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed);
std::int64_t count_parameters(const ModelConfig& cfg);

enum class RunMode { kTrain, kEval };

struct LayerCache {
  Eigen::MatrixXd x_in;      // block input
  Eigen::MatrixXd attn_in;   // matrix q/k/v were computed from
  Eigen::MatrixXd ln1_xhat;
  Eigen::VectorXd ln1_inv_std;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> probs;  // per head, T×T
  Eigen::MatrixXd ctx;
  Eigen::MatrixXd attn_drop;  // elementwise multiplier, empty in eval mode
  Eigen::MatrixXd res1;       // first residual sum
  Eigen::MatrixXd ff_in;      // matrix the feed-forward was applied to
  Eigen::MatrixXd ln2_xhat;
  Eigen::VectorXd ln2_inv_std;
  Eigen::MatrixXd ff_pre;  // pre-activation, T×d_ff
  Eigen::MatrixXd ff_drop;
};

struct RowCache {
  Eigen::MatrixXd embed_out;
  std::vector<LayerCache> layers;
  Eigen::MatrixXd final_in;  // last block output
  Eigen::MatrixXd final_xhat;
  Eigen::VectorXd final_inv_std;
  Eigen::MatrixXd hidden;  // final hidden states, T×H
};

struct ActivationCache {
  ModelConfig cfg;
  RunMode mode = RunMode::kEval;
  std::uint64_t dropout_seed = 0;
  std::vector<std::vector<int>> input_ids;
  std::vector<std::vector<int>> positions;
  std::vector<std::vector<bool>> attention;
  std::vector<RowCache> rows;

  // Block output of `layer` (0 = embeddings, layers = pre-final-norm states).
  const Eigen::MatrixXd& states_after(std::size_t row, int layer) const;
};

struct ForwardResult {
  std::vector<Eigen::MatrixXd> logits;  // per row, T×V
  std::vector<Eigen::MatrixXd> hidden;  // per row, T×H (final states)
  ActivationCache cache;
};

// Full encoder + MLM projection. Train mode applies dropout with masks
// derived from (dropout_seed, row, layer), recorded in the cache so backward
// and replays are exact.
ForwardResult forward(const Parameters& params, const MaskedBatch& batch,
                      RunMode mode, std::uint64_t dropout_seed = 0);

// Runs the blocks directly on externally produced per-row states [T×H]
// instead of token embeddings; stacked classifiers feed another encoder's
// outputs in here. Such rows produce no token/position embedding gradients —
// backward_from_hidden's d_embed_out is the gradient at the injected states.
ForwardResult forward_states(const Parameters& params,
                             const std::vector<Eigen::MatrixXd>& states,
                             const std::vector<std::vector<bool>>& attention,
                             RunMode mode, std::uint64_t dropout_seed = 0);

struct LossResult {
  double loss = 0.0;
  std::size_t labeled = 0;
  std::vector<Eigen::MatrixXd> d_logits;
};

// Mean cross-entropy over labeled positions, log-sum-exp stabilized.
LossResult mlm_loss(const std::vector<Eigen::MatrixXd>& logits,
                    const std::vector<std::vector<int>>& labels);

// Analytic gradients for every parameter, back through the MLM projection.
Parameters backward(const Parameters& params, const ActivationCache& cache,
                    const std::vector<Eigen::MatrixXd>& d_logits);

// Gradients when the loss is a function of the final hidden states instead
// of MLM logits (task heads attach here). d_hidden: per row, T×H.
Parameters backward_from_hidden(const Parameters& params,
                                const ActivationCache& cache,
                                const std::vector<Eigen::MatrixXd>& d_hidden,
                                std::vector<Eigen::MatrixXd>* d_embed_out = nullptr);

// Final hidden states of a single unmasked sequence, eval mode. [T×H]
Eigen::MatrixXd encode_tokens(const Parameters& params,
                              const std::vector<int>& ids);

}  // namespace mlmkit
