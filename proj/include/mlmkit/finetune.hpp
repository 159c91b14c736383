#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlmkit/bpe.hpp"
#include "mlmkit/checkpoint.hpp"
#include "mlmkit/optimizer.hpp"
#include "mlmkit/transformer.hpp"

namespace mlmkit {

struct TaskExample {
  std::vector<std::string> text_a;
  std::optional<std::vector<std::string>> text_b;
  int label = 0;
};

enum class HeadKind { kDeep, kShallow };

struct HeadConfig {
  HeadKind kind = HeadKind::kDeep;
  int hidden = 0;
  int num_classes = 0;
  double dropout = 0.1;

  void validate() const;  // throws DataError on inconsistent shapes
};

// Deep: dropout -> linear(H->H) -> tanh -> dropout -> linear(H->C).
// Shallow: dropout -> linear(H->C). Dense tensors exist only for deep heads.
struct HeadParams {
  HeadConfig cfg;
  Eigen::MatrixXd dense_w;  // H×H
  Eigen::VectorXd dense_b;  // H
  Eigen::MatrixXd out_w;    // H×C
  Eigen::VectorXd out_b;    // C

  template <class F>
  void for_each_tensor(F&& f) {
    if (cfg.kind == HeadKind::kDeep) {
      f("head.dense_w", true, dense_w);
      f("head.dense_b", false, dense_b);
    }
    f("head.out_w", true, out_w);
    f("head.out_b", false, out_b);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    const_cast<HeadParams*>(this)->for_each_tensor(
        [&](const std::string& name, bool is_matrix, auto& t) {
          f(name, is_matrix, static_cast<const std::decay_t<decltype(t)>&>(t));
        });
  }

  static HeadParams zeros(const HeadConfig& cfg);
};

HeadParams init_head(const HeadConfig& cfg, std::uint64_t seed);

struct HeadCache {
  RunMode mode = RunMode::kEval;
  Eigen::MatrixXd input;      // B×H pooled states
  Eigen::MatrixXd drop1;      // elementwise multipliers, empty in eval mode
  Eigen::MatrixXd dense_pre;  // B×H, deep only
  Eigen::MatrixXd dense_act;  // B×H tanh output, deep only
  Eigen::MatrixXd drop2;
};

struct HeadForwardResult {
  Eigen::MatrixXd logits;  // B×C
  HeadCache cache;
};

// `pooled` holds one example per row. Train mode applies dropout with masks
// derived from dropout_seed, recorded in the cache so backward is exact.
HeadForwardResult head_forward(const HeadParams& head,
                               const Eigen::MatrixXd& pooled, RunMode mode,
                               std::uint64_t dropout_seed = 0);

struct HeadBackwardResult {
  HeadParams grads;
  Eigen::MatrixXd d_pooled;  // B×H
};

HeadBackwardResult head_backward(const HeadParams& head,
                                 const HeadCache& cache,
                                 const Eigen::MatrixXd& d_logits);

struct ClassLossResult {
  double loss = 0.0;
  Eigen::MatrixXd d_logits;  // already scaled by 1/B
};

// Mean cross-entropy over rows, log-sum-exp stabilized. Every row must have
// a label in [0, C).
ClassLossResult class_loss(const Eigen::MatrixXd& logits,
                           const std::vector<int>& labels);

// Encodes the example and assembles BOS a EOS for single texts and
// BOS a EOS b EOS for pairs. When the result would exceed max_len, ids are
// dropped from the end of the longer side first (ties trim side b).
std::vector<int> build_input(const TaskExample& ex, const BpeVocab& vocab,
                             const MergeTable& merges, std::size_t max_len);

double accuracy(const std::vector<int>& preds, const std::vector<int>& golds);

enum class ValPolicy { kSplit20, kDevSet };

struct GridSearchConfig {
  std::vector<double> learning_rates{1e-5, 5e-5, 1e-6, 5e-6};
  int epochs = 30;
  int batch_size = 8;
  ValPolicy val_policy = ValPolicy::kSplit20;

  void validate() const;
};

struct EncodedExample {
  std::vector<int> ids;
  int label = 0;
};

struct TaskData {
  std::vector<EncodedExample> train;
  std::vector<EncodedExample> dev;  // required only under ValPolicy::kDevSet
  std::vector<EncodedExample> test;
  std::uint64_t vocab_hash = 0;
};

// Deterministic shuffle, then the last fifth (at least one example) becomes
// the validation set.
std::pair<std::vector<EncodedExample>, std::vector<EncodedExample>> split20(
    const std::vector<EncodedExample>& train, std::uint64_t seed);

// Argmax class per example; ties resolve to the lowest class id.
std::vector<int> predict(const Parameters& encoder, const HeadParams& head,
                         const std::vector<EncodedExample>& examples,
                         int batch_size);

struct GridRunReport {
  double lr = 0.0;
  double val_accuracy = 0.0;
  int best_epoch = 0;
};

struct FinetuneResult {
  double best_lr = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<GridRunReport> runs;
  Parameters encoder;
  HeadParams head;
};

// Full-network fine-tuning (encoder and head) once per learning rate in the
// grid; within a run the best validation epoch is kept, across runs the best
// validation accuracy wins (ties keep the earlier candidate). Test accuracy
// is computed once, for the selected model.
FinetuneResult finetune_task(const Checkpoint& ckpt, const TaskData& data,
                             const HeadConfig& head_cfg,
                             const GridSearchConfig& grid, std::uint64_t seed);

}  // namespace mlmkit
