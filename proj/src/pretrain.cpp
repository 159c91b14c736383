#include "mlmkit/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "mlmkit/common.hpp"

namespace mlmkit {

namespace {

void add_into(Parameters& dst, const Parameters& src) {
  std::vector<double*> slots;
  std::vector<Eigen::Index> sizes;
  dst.for_each_tensor([&](const std::string&, bool, auto& t) {
    slots.push_back(t.data());
    sizes.push_back(t.size());
  });
  std::size_t i = 0;
  src.for_each_tensor([&](const std::string&, bool, const auto& t) {
    Eigen::Map<Eigen::VectorXd>(slots[i], sizes[i]) +=
        Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    ++i;
  });
}

void scale_in_place(Parameters& p, double s) {
  p.for_each_tensor([&](const std::string&, bool, auto& t) { t *= s; });
}

}  // namespace

PretrainResult train_mlm(const std::vector<std::vector<int>>& sequences,
                         const PretrainOptions& opt) {
  opt.model.validate();
  opt.adam.validate();
  opt.masking.validate();
  if (sequences.empty()) throw DataError("pretrain: no sequences");
  if (opt.micro_batch < 1)
    throw DataError("pretrain: micro_batch must be at least 1");

  auto log = [&](const std::string& line) {
    if (opt.log) opt.log(line);
  };
  log("effective batch: " + std::to_string(opt.adam.accumulation) +
      " accumulation x " + std::to_string(opt.micro_batch) +
      " micro-batch = " +
      std::to_string(std::int64_t(opt.adam.accumulation) * opt.micro_batch) +
      " sequences per update");

  namespace fs = std::filesystem;
  std::string state_path, model_path, csv_path;
  if (!opt.out_dir.empty()) {
    fs::create_directories(opt.out_dir);
    state_path = (fs::path(opt.out_dir) / "train_state.mlmt").string();
    model_path = (fs::path(opt.out_dir) / "model.mlmf").string();
    csv_path = (fs::path(opt.out_dir) / "loss.csv").string();
  }

  PretrainResult result;
  std::int64_t start_step = 0;
  AdamState state;
  if (opt.resume) {
    if (state_path.empty())
      throw DataError("pretrain: resume requires an output directory");
    TrainState ts = load_train_state(state_path);
    result.params = std::move(ts.params);
    state.m = std::move(ts.m);
    state.v = std::move(ts.v);
    state.step = ts.step;
    start_step = std::int64_t(ts.step);
    log("resumed from step " + std::to_string(start_step));
  } else {
    result.params = init_parameters(opt.model, opt.seed);
    state = AdamState::zeros(opt.model);
  }

  LrSchedule sched{opt.adam.warmup_steps, opt.adam.peak_lr,
                   opt.adam.total_steps};
  std::int64_t end_step = opt.adam.total_steps;
  if (opt.stop_after_step > 0)
    end_step = std::min(end_step, opt.stop_after_step);

  const std::int64_t n = std::int64_t(sequences.size());
  const std::int64_t batches_per_epoch = (n + opt.micro_batch - 1) /
                                         opt.micro_batch;

  std::int64_t cached_epoch = -1;
  std::vector<MaskedBatch> epoch_batches;
  auto batch_at = [&](std::int64_t micro_index) -> const MaskedBatch& {
    std::int64_t epoch = micro_index / batches_per_epoch;
    if (epoch != cached_epoch) {
      std::vector<std::size_t> order(sequences.size());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(mix64(opt.seed, 1, std::uint64_t(epoch)));
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<std::vector<int>> shuffled;
      shuffled.reserve(sequences.size());
      for (std::size_t idx : order) shuffled.push_back(sequences[idx]);
      MaskingConfig mc = opt.masking;
      epoch_batches = make_batches(shuffled, opt.micro_batch, mc,
                                   opt.model.vocab_size, std::uint64_t(epoch));
      cached_epoch = epoch;
    }
    return epoch_batches[std::size_t(micro_index % batches_per_epoch)];
  };

  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path, opt.resume ? std::ios::app : std::ios::trunc);
    if (!csv) throw DataError(csv_path + ": cannot open for writing");
    if (!opt.resume) csv << "step,lr,loss\n";
    csv << std::setprecision(17);
  }

  auto write_snapshot = [&](std::uint64_t step) {
    if (opt.out_dir.empty()) return;
    save_checkpoint(model_path, result.params, opt.vocab_hash, step);
    TrainState ts;
    ts.params = result.params;
    ts.m = state.m;
    ts.v = state.v;
    ts.step = step;
    save_train_state(state_path, ts);
  };

  auto has_labels = [](const MaskedBatch& b) {
    for (const auto& row : b.labels)
      for (int lab : row)
        if (lab != kIgnoreLabel) return true;
    return false;
  };

  bool first_batch = !opt.resume;
  for (std::int64_t s = start_step; s < end_step; ++s) {
    Parameters grad_sum = Parameters::zeros(opt.model);
    double loss_sum = 0.0;
    int counted = 0;
    for (int k = 0; k < opt.adam.accumulation; ++k) {
      std::int64_t mi = s * opt.adam.accumulation + k;
      const MaskedBatch& batch = batch_at(mi);
      // A short trailing batch can draw no masked positions at all; its
      // gradient contribution is exactly zero, so skip it.
      if (!has_labels(batch)) continue;
      std::uint64_t dropout_seed = mix64(opt.seed, 2, std::uint64_t(mi));
      auto fr = forward(result.params, batch, RunMode::kTrain, dropout_seed);
      auto loss = mlm_loss(fr.logits, batch.labels);
      if (!std::isfinite(loss.loss))
        throw NumericError("pretrain: non-finite loss at step " +
                           std::to_string(s + 1) +
                           " (last good checkpoint retained)");
      if (first_batch) {
        result.initial_loss = loss.loss;
        first_batch = false;
      }
      loss_sum += loss.loss;
      ++counted;
      Parameters grads = backward(result.params, fr.cache, loss.d_logits);
      add_into(grad_sum, grads);
    }
    scale_in_place(grad_sum, 1.0 / opt.adam.accumulation);
    clip_global_norm(grad_sum, opt.clip_norm);

    double lr = lr_at_step(sched, s + 1);
    adam_step(result.params, grad_sum, state, opt.adam, lr);

    LossPoint point{s + 1, lr, counted > 0 ? loss_sum / counted : 0.0};
    result.curve.push_back(point);
    if (csv.is_open())
      csv << point.step << ',' << point.lr << ',' << point.loss << '\n';
    if (point.step % 50 == 0 || point.step == end_step)
      log("step " + std::to_string(point.step) + " lr " +
          std::to_string(point.lr) + " loss " + std::to_string(point.loss));

    if (opt.checkpoint_every > 0 && point.step % opt.checkpoint_every == 0 &&
        point.step != end_step)
      write_snapshot(std::uint64_t(point.step));
  }

  result.final_loss = result.curve.empty() ? result.initial_loss
                                           : result.curve.back().loss;
  write_snapshot(state.step);
  result.state = std::move(state);
  if (!opt.out_dir.empty()) result.checkpoint_path = model_path;
  return result;
}

}  // namespace mlmkit
