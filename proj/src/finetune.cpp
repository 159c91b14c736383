#include "mlmkit/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "mlmkit/common.hpp"

namespace mlmkit {

namespace {

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      mask(i, j) = unit(rng) < p ? 0.0 : keep_scale;
  return mask;
}

// Empty masks mean "no dropout at this site".
Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& mask) {
  return mask.size() == 0 ? x : x.cwiseProduct(mask).eval();
}

MaskedBatch to_batch(const std::vector<const EncodedExample*>& examples) {
  std::size_t width = 0;
  for (const EncodedExample* ex : examples)
    width = std::max(width, ex->ids.size());

  MaskedBatch batch;
  for (const EncodedExample* ex : examples) {
    std::vector<int> input(width, BpeVocab::kPad);
    std::copy(ex->ids.begin(), ex->ids.end(), input.begin());
    std::vector<bool> attend(width, false);
    std::fill(attend.begin(), attend.begin() + long(ex->ids.size()), true);
    std::vector<int> pos(width);
    std::iota(pos.begin(), pos.end(), 0);
    batch.inputs.push_back(std::move(input));
    batch.labels.emplace_back(width, kIgnoreLabel);
    batch.attention.push_back(std::move(attend));
    batch.positions.push_back(std::move(pos));
  }
  return batch;
}

Eigen::MatrixXd pool_bos(const std::vector<Eigen::MatrixXd>& hidden) {
  Eigen::MatrixXd pooled(Eigen::Index(hidden.size()), hidden[0].cols());
  for (std::size_t r = 0; r < hidden.size(); ++r)
    pooled.row(Eigen::Index(r)) = hidden[r].row(0);
  return pooled;
}

std::vector<int> labels_of(const std::vector<EncodedExample>& examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.label);
  return out;
}

void check_labels(const std::vector<EncodedExample>& examples,
                  int num_classes, const std::string& which) {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    int label = examples[i].label;
    if (label < 0 || label >= num_classes)
      throw DataError("finetune: " + which + " example " + std::to_string(i) +
                      " has label " + std::to_string(label) +
                      " outside [0, " + std::to_string(num_classes) + ")");
  }
}

struct HeadAdam {
  std::uint64_t step = 0;
  HeadParams m;
  HeadParams v;
};

}  // namespace

void HeadConfig::validate() const {
  if (hidden <= 0) throw DataError("head config: hidden must be positive");
  if (num_classes < 2)
    throw DataError("head config: need at least two classes");
  if (dropout < 0.0 || dropout >= 1.0)
    throw DataError("head config: dropout must lie in [0, 1)");
}

HeadParams HeadParams::zeros(const HeadConfig& cfg) {
  cfg.validate();
  HeadParams p;
  p.cfg = cfg;
  if (cfg.kind == HeadKind::kDeep) {
    p.dense_w = Eigen::MatrixXd::Zero(cfg.hidden, cfg.hidden);
    p.dense_b = Eigen::VectorXd::Zero(cfg.hidden);
  }
  p.out_w = Eigen::MatrixXd::Zero(cfg.hidden, cfg.num_classes);
  p.out_b = Eigen::VectorXd::Zero(cfg.num_classes);
  return p;
}

HeadParams init_head(const HeadConfig& cfg, std::uint64_t seed) {
  HeadParams p = HeadParams::zeros(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  p.for_each_tensor([&](const std::string&, bool is_matrix, auto& t) {
    if (!is_matrix) return;  // biases stay zero
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = normal(rng);
  });
  return p;
}

HeadForwardResult head_forward(const HeadParams& head,
                               const Eigen::MatrixXd& pooled, RunMode mode,
                               std::uint64_t dropout_seed) {
  const HeadConfig& cfg = head.cfg;
  cfg.validate();
  if (pooled.rows() == 0) throw DataError("head forward: empty batch");
  if (pooled.cols() != cfg.hidden)
    throw DataError("head forward: pooled state width " +
                    std::to_string(pooled.cols()) + ", expected " +
                    std::to_string(cfg.hidden));

  bool drop = mode == RunMode::kTrain && cfg.dropout > 0.0;
  HeadForwardResult out;
  out.cache.mode = mode;
  out.cache.input = pooled;

  if (drop)
    out.cache.drop1 = dropout_mask(pooled.rows(), pooled.cols(), cfg.dropout,
                                   mix64(dropout_seed, 0));
  Eigen::MatrixXd x = apply_mask(pooled, out.cache.drop1);

  if (cfg.kind == HeadKind::kDeep) {
    out.cache.dense_pre =
        (x * head.dense_w).rowwise() + head.dense_b.transpose();
    out.cache.dense_act = out.cache.dense_pre.array().tanh().matrix();
    if (drop)
      out.cache.drop2 = dropout_mask(pooled.rows(), pooled.cols(), cfg.dropout,
                                     mix64(dropout_seed, 1));
    x = apply_mask(out.cache.dense_act, out.cache.drop2);
  }

  out.logits = (x * head.out_w).rowwise() + head.out_b.transpose();
  return out;
}

HeadBackwardResult head_backward(const HeadParams& head,
                                 const HeadCache& cache,
                                 const Eigen::MatrixXd& d_logits) {
  const HeadConfig& cfg = head.cfg;
  if (d_logits.rows() != cache.input.rows() ||
      d_logits.cols() != cfg.num_classes)
    throw DataError("head backward: gradient shape mismatch");

  HeadBackwardResult out;
  out.grads = HeadParams::zeros(cfg);

  if (cfg.kind == HeadKind::kDeep) {
    Eigen::MatrixXd dropped_act = apply_mask(cache.dense_act, cache.drop2);
    out.grads.out_w = dropped_act.transpose() * d_logits;
    out.grads.out_b = d_logits.colwise().sum().transpose();

    Eigen::MatrixXd d_act =
        apply_mask(d_logits * head.out_w.transpose(), cache.drop2);
    Eigen::MatrixXd d_pre =
        (d_act.array() * (1.0 - cache.dense_act.array().square())).matrix();

    Eigen::MatrixXd dropped_in = apply_mask(cache.input, cache.drop1);
    out.grads.dense_w = dropped_in.transpose() * d_pre;
    out.grads.dense_b = d_pre.colwise().sum().transpose();
    out.d_pooled = apply_mask(d_pre * head.dense_w.transpose(), cache.drop1);
  } else {
    Eigen::MatrixXd dropped_in = apply_mask(cache.input, cache.drop1);
    out.grads.out_w = dropped_in.transpose() * d_logits;
    out.grads.out_b = d_logits.colwise().sum().transpose();
    out.d_pooled = apply_mask(d_logits * head.out_w.transpose(), cache.drop1);
  }
  return out;
}

ClassLossResult class_loss(const Eigen::MatrixXd& logits,
                           const std::vector<int>& labels) {
  Eigen::Index rows = logits.rows();
  Eigen::Index classes = logits.cols();
  if (rows == 0) throw DataError("class loss: empty batch");
  if (Eigen::Index(labels.size()) != rows)
    throw DataError("class loss: " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(rows) + " rows");

  ClassLossResult out;
  out.d_logits = Eigen::MatrixXd(rows, classes);
  for (Eigen::Index r = 0; r < rows; ++r) {
    int label = labels[std::size_t(r)];
    if (label < 0 || label >= classes)
      throw DataError("class loss: label " + std::to_string(label) +
                      " outside [0, " + std::to_string(classes) + ")");
    double max = logits.row(r).maxCoeff();
    Eigen::ArrayXd shifted = logits.row(r).transpose().array() - max;
    double z = shifted.exp().sum();
    out.loss += std::log(z) + max - logits(r, label);
    out.d_logits.row(r) = (shifted.exp() / z).matrix().transpose();
    out.d_logits(r, label) -= 1.0;
  }
  out.loss /= double(rows);
  out.d_logits /= double(rows);
  return out;
}

std::vector<int> build_input(const TaskExample& ex, const BpeVocab& vocab,
                             const MergeTable& merges, std::size_t max_len) {
  std::vector<int> a = encode_sequence(ex.text_a, vocab, merges).ids;
  if (!ex.text_b.has_value()) {
    std::size_t budget = max_len >= 2 ? max_len - 2 : 0;
    if (a.size() > budget) a.resize(budget);
    std::vector<int> ids{BpeVocab::kBos};
    ids.insert(ids.end(), a.begin(), a.end());
    ids.push_back(BpeVocab::kEos);
    return ids;
  }

  std::vector<int> b = encode_sequence(*ex.text_b, vocab, merges).ids;
  while (a.size() + b.size() + 3 > max_len && (!a.empty() || !b.empty())) {
    if (a.size() > b.size())
      a.pop_back();
    else
      b.pop_back();
  }
  std::vector<int> ids{BpeVocab::kBos};
  ids.insert(ids.end(), a.begin(), a.end());
  ids.push_back(BpeVocab::kEos);
  ids.insert(ids.end(), b.begin(), b.end());
  ids.push_back(BpeVocab::kEos);
  return ids;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size())
    throw DataError("accuracy: " + std::to_string(preds.size()) +
                    " predictions for " + std::to_string(golds.size()) +
                    " labels");
  if (preds.empty()) throw DataError("accuracy: empty inputs");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++matches;
  return double(matches) / double(preds.size());
}

void GridSearchConfig::validate() const {
  if (learning_rates.empty())
    throw DataError("grid config: empty learning-rate set");
  for (double lr : learning_rates)
    if (lr <= 0.0) throw DataError("grid config: learning rates must be positive");
  if (epochs < 1) throw DataError("grid config: epochs must be at least 1");
  if (batch_size < 1)
    throw DataError("grid config: batch size must be at least 1");
}

std::pair<std::vector<EncodedExample>, std::vector<EncodedExample>> split20(
    const std::vector<EncodedExample>& train, std::uint64_t seed) {
  if (train.size() < 2)
    throw DataError("split20: need at least two examples");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix64(seed, 20));
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t n_val = std::max<std::size_t>(1, train.size() / 5);
  std::pair<std::vector<EncodedExample>, std::vector<EncodedExample>> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < order.size() - n_val ? out.first : out.second)
        .push_back(train[order[i]]);
  return out;
}

std::vector<int> predict(const Parameters& encoder, const HeadParams& head,
                         const std::vector<EncodedExample>& examples,
                         int batch_size) {
  if (batch_size < 1) throw DataError("predict: batch size must be positive");
  std::vector<int> preds;
  preds.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size();
       start += std::size_t(batch_size)) {
    std::size_t stop =
        std::min(examples.size(), start + std::size_t(batch_size));
    std::vector<const EncodedExample*> slice;
    for (std::size_t i = start; i < stop; ++i) slice.push_back(&examples[i]);
    MaskedBatch batch = to_batch(slice);

    auto fr = forward(encoder, batch, RunMode::kEval);
    auto hr = head_forward(head, pool_bos(fr.hidden), RunMode::kEval);
    for (Eigen::Index r = 0; r < hr.logits.rows(); ++r) {
      int best = 0;
      for (Eigen::Index c = 1; c < hr.logits.cols(); ++c)
        if (hr.logits(r, c) > hr.logits(r, best)) best = int(c);
      preds.push_back(best);
    }
  }
  return preds;
}

FinetuneResult finetune_task(const Checkpoint& ckpt, const TaskData& data,
                             const HeadConfig& head_cfg,
                             const GridSearchConfig& grid,
                             std::uint64_t seed) {
  grid.validate();
  head_cfg.validate();
  const ModelConfig& cfg = ckpt.params.cfg;
  cfg.validate();
  if (head_cfg.hidden != cfg.hidden)
    throw DataError("finetune: head width " + std::to_string(head_cfg.hidden) +
                    " does not match encoder width " +
                    std::to_string(cfg.hidden));
  if (data.train.empty() || data.test.empty())
    throw DataError("finetune: empty dataset");
  if (data.vocab_hash != ckpt.vocab_hash)
    throw DataError("finetune: vocabulary hash mismatch between checkpoint "
                    "and dataset");
  check_labels(data.train, head_cfg.num_classes, "train");
  check_labels(data.dev, head_cfg.num_classes, "dev");
  check_labels(data.test, head_cfg.num_classes, "test");

  std::vector<EncodedExample> fit, val;
  if (grid.val_policy == ValPolicy::kSplit20) {
    std::tie(fit, val) = split20(data.train, mix64(seed, 1));
  } else {
    if (data.dev.empty())
      throw DataError("finetune: dev-set validation needs a dev set");
    fit = data.train;
    val = data.dev;
  }
  std::vector<int> val_golds = labels_of(val);

  AdamConfig adam;
  adam.accumulation = 1;

  FinetuneResult result;
  double best_val = -1.0;

  for (std::size_t li = 0; li < grid.learning_rates.size(); ++li) {
    double lr = grid.learning_rates[li];
    Parameters encoder = ckpt.params;
    HeadParams head = init_head(head_cfg, mix64(seed, li, 3));
    AdamState enc_state = AdamState::zeros(cfg);
    HeadAdam head_state;
    head_state.m = HeadParams::zeros(head_cfg);
    head_state.v = HeadParams::zeros(head_cfg);

    double run_best_val = -1.0;
    int run_best_epoch = 0;
    Parameters run_best_encoder;
    HeadParams run_best_head;

    for (int epoch = 0; epoch < grid.epochs; ++epoch) {
      std::uint64_t run_tag = std::uint64_t(li) * 100000 + std::uint64_t(epoch);
      std::vector<std::size_t> order(fit.size());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(mix64(seed, run_tag, 5));
      std::shuffle(order.begin(), order.end(), rng);

      std::size_t n_batches = 0;
      for (std::size_t start = 0; start < order.size();
           start += std::size_t(grid.batch_size), ++n_batches) {
        std::size_t stop =
            std::min(order.size(), start + std::size_t(grid.batch_size));
        std::vector<const EncodedExample*> slice;
        std::vector<int> labels;
        for (std::size_t i = start; i < stop; ++i) {
          slice.push_back(&fit[order[i]]);
          labels.push_back(fit[order[i]].label);
        }
        MaskedBatch batch = to_batch(slice);

        auto fr = forward(encoder, batch, RunMode::kTrain,
                          mix64(seed, run_tag, 1'000'000 + n_batches));
        auto hr = head_forward(head, pool_bos(fr.hidden), RunMode::kTrain,
                               mix64(seed, run_tag, 2'000'000 + n_batches));
        auto lossres = class_loss(hr.logits, labels);
        auto hb = head_backward(head, hr.cache, lossres.d_logits);

        std::vector<Eigen::MatrixXd> d_hidden;
        for (std::size_t r = 0; r < slice.size(); ++r) {
          Eigen::MatrixXd d = Eigen::MatrixXd::Zero(
              Eigen::Index(batch.cols()), cfg.hidden);
          d.row(0) = hb.d_pooled.row(Eigen::Index(r));
          d_hidden.push_back(std::move(d));
        }
        Parameters enc_grads =
            backward_from_hidden(encoder, fr.cache, d_hidden);

        // Encoder and head clip as one parameter set.
        double norm = std::sqrt(pack_squared_norm(enc_grads) +
                                pack_squared_norm(hb.grads));
        if (norm > 1.0) {
          pack_scale(enc_grads, 1.0 / norm);
          pack_scale(hb.grads, 1.0 / norm);
        }

        adam_step(encoder, enc_grads, enc_state, adam, lr);
        adam_step_pack(head, hb.grads, head_state.step + 1, head_state.m,
                       head_state.v, adam, lr);
        head_state.step += 1;
      }

      // Ties keep the later epoch: equal validation, more optimization.
      double val_acc = accuracy(
          predict(encoder, head, val, grid.batch_size), val_golds);
      if (val_acc >= run_best_val) {
        run_best_val = val_acc;
        run_best_epoch = epoch;
        run_best_encoder = encoder;
        run_best_head = head;
      }
    }

    result.runs.push_back(GridRunReport{lr, run_best_val, run_best_epoch});
    if (run_best_val > best_val) {
      best_val = run_best_val;
      result.best_lr = lr;
      result.val_accuracy = run_best_val;
      result.encoder = std::move(run_best_encoder);
      result.head = std::move(run_best_head);
    }
  }

  result.test_accuracy = accuracy(
      predict(result.encoder, result.head, data.test, grid.batch_size),
      labels_of(data.test));
  return result;
}

}  // namespace mlmkit
