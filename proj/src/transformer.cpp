#include "mlmkit/transformer.hpp"

#include <cmath>
#include <random>

#include "mlmkit/common.hpp"

namespace mlmkit {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kMaskedScore = -1e30;

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd linear(const MatrixXd& x, const MatrixXd& w, const VectorXd& b) {
  return (x * w).rowwise() + b.transpose();
}

MatrixXd gelu(const MatrixXd& x) {
  return x.unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
}

MatrixXd gelu_grad(const MatrixXd& x) {
  return x.unaryExpr([](double v) {
    double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
    double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
    return cdf + v * pdf;
  });
}

MatrixXd layernorm_forward(const MatrixXd& x, const VectorXd& scale,
                           const VectorXd& shift, MatrixXd& xhat,
                           VectorXd& inv_std) {
  const auto rows = x.rows();
  xhat.resize(rows, x.cols());
  inv_std.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double mean = x.row(i).mean();
    double var = (x.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(i) = ((x.row(i).array() - mean) * inv_std(i)).matrix();
  }
  return ((xhat.array().rowwise() * scale.transpose().array()).rowwise() +
          shift.transpose().array())
      .matrix();
}

MatrixXd layernorm_backward(const MatrixXd& dy, const MatrixXd& xhat,
                            const VectorXd& inv_std, const VectorXd& scale,
                            VectorXd& dscale, VectorXd& dshift) {
  dscale += (dy.array() * xhat.array()).colwise().sum().matrix().transpose();
  dshift += dy.colwise().sum().transpose();
  MatrixXd dxhat = (dy.array().rowwise() * scale.transpose().array()).matrix();
  MatrixXd dx(xhat.rows(), xhat.cols());
  for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
    double m1 = dxhat.row(i).mean();
    double m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
    dx.row(i) =
        (inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2))
            .matrix();
  }
  return dx;
}

// Inverted-dropout multiplier matrix: entries are 0 or 1/(1-p).
MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  MatrixXd mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      mask(i, j) = unit(rng) < p ? 0.0 : keep_scale;
  return mask;
}

struct AttentionGrads {
  MatrixXd d_attn_in;
  MatrixXd dq_full, dk_full, dv_full;
};

}  // namespace

void ModelConfig::validate() const {
  if (layers < 0) throw DataError("model config: negative layer count");
  if (hidden <= 0 || heads <= 0)
    throw DataError("model config: hidden and heads must be positive");
  if (hidden % heads != 0)
    throw DataError("model config: hidden must be divisible by heads");
  if (d_ff < hidden) throw DataError("model config: d_ff must be at least hidden");
  if (vocab_size <= BpeVocab::kNumSpecials)
    throw DataError("model config: vocab_size too small");
  if (max_positions < 1)
    throw DataError("model config: max_positions must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw DataError("model config: dropout outside [0,1)");
}

ModelConfig ModelConfig::base(int vocab_size) {
  ModelConfig cfg;
  cfg.layers = 12;
  cfg.hidden = 768;
  cfg.heads = 12;
  cfg.d_ff = 4 * 768;
  cfg.vocab_size = vocab_size;
  cfg.max_positions = 512;
  return cfg;
}

ModelConfig ModelConfig::large(int vocab_size) {
  ModelConfig cfg;
  cfg.layers = 24;
  cfg.hidden = 1024;
  cfg.heads = 16;
  cfg.d_ff = 4 * 1024;
  cfg.vocab_size = vocab_size;
  cfg.max_positions = 512;
  return cfg;
}

ModelConfig ModelConfig::toy(int vocab_size) {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 64;
  cfg.heads = 4;
  cfg.d_ff = 4 * 64;
  cfg.vocab_size = vocab_size;
  cfg.max_positions = 128;
  return cfg;
}

Parameters Parameters::zeros(const ModelConfig& cfg) {
  cfg.validate();
  Parameters p;
  p.cfg = cfg;
  const int h = cfg.hidden, v = cfg.vocab_size;
  p.token_embed = MatrixXd::Zero(v, h);
  p.pos_embed = MatrixXd::Zero(cfg.max_positions, h);
  p.layers.resize(cfg.layers);
  for (auto& lp : p.layers) {
    lp.wq = lp.wk = lp.wv = lp.wo = MatrixXd::Zero(h, h);
    lp.bq = lp.bk = lp.bv = lp.bo = VectorXd::Zero(h);
    lp.ln1_scale = lp.ln1_shift = lp.ln2_scale = lp.ln2_shift = VectorXd::Zero(h);
    lp.w1 = MatrixXd::Zero(h, cfg.d_ff);
    lp.b1 = VectorXd::Zero(cfg.d_ff);
    lp.w2 = MatrixXd::Zero(cfg.d_ff, h);
    lp.b2 = VectorXd::Zero(h);
  }
  p.final_ln_scale = VectorXd::Zero(h);
  p.final_ln_shift = VectorXd::Zero(h);
  p.mlm_bias = VectorXd::Zero(v);
  if (!cfg.tie_mlm_head) p.mlm_proj = MatrixXd::Zero(h, v);
  return p;
}

Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  Parameters p = Parameters::zeros(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  p.for_each_tensor([&](const std::string& name, bool is_matrix, auto& t) {
    if (is_matrix) {
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = normal(rng);
    } else if (name.find("ln") != std::string::npos &&
               name.find("scale") != std::string::npos) {
      t.setOnes();
    }
    // remaining vectors (biases, shifts) stay zero
  });
  return p;
}

std::int64_t count_parameters(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t h = cfg.hidden, v = cfg.vocab_size, f = cfg.d_ff;
  std::int64_t per_layer = 4 * (h * h + h)  // attention projections
                           + 4 * h          // two layernorms
                           + (h * f + f) + (f * h + h);
  std::int64_t total = v * h + cfg.max_positions * h + cfg.layers * per_layer +
                       2 * h  // final layernorm
                       + v;   // mlm bias
  if (!cfg.tie_mlm_head) total += h * v;
  return total;
}

const Eigen::MatrixXd& ActivationCache::states_after(std::size_t row,
                                                     int layer) const {
  const RowCache& rc = rows.at(row);
  if (layer == 0) return rc.embed_out;
  if (layer == cfg.layers) return rc.final_in;
  if (layer < 0 || layer > cfg.layers)
    throw DataError("cache: layer index out of range");
  return rc.layers.at(layer).x_in;
}

ForwardResult forward(const Parameters& params, const MaskedBatch& batch,
                      RunMode mode, std::uint64_t dropout_seed) {
  const ModelConfig& cfg = params.cfg;
  cfg.validate();
  const int h = cfg.hidden;
  const int dh = h / cfg.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool use_dropout = mode == RunMode::kTrain && cfg.dropout > 0.0;

  ForwardResult result;
  result.cache.cfg = cfg;
  result.cache.mode = mode;
  result.cache.dropout_seed = dropout_seed;
  result.cache.input_ids = batch.inputs;
  result.cache.positions = batch.positions;
  result.cache.attention = batch.attention;

  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const auto& ids = batch.inputs[r];
    const auto& pos = batch.positions[r];
    const auto& attend = batch.attention[r];
    const int t_len = static_cast<int>(ids.size());
    if (t_len == 0) throw DataError("forward: empty row");

    RowCache rc;
    MatrixXd x(t_len, h);
    for (int t = 0; t < t_len; ++t) {
      if (ids[t] < 0 || ids[t] >= cfg.vocab_size)
        throw DataError("forward: token id " + std::to_string(ids[t]) +
                        " outside vocabulary");
      if (pos[t] < 0 || pos[t] >= cfg.max_positions)
        throw DataError("forward: position " + std::to_string(pos[t]) +
                        " exceeds max_positions");
      x.row(t) = params.token_embed.row(ids[t]) + params.pos_embed.row(pos[t]);
    }
    rc.embed_out = x;

    for (int l = 0; l < cfg.layers; ++l) {
      const LayerParams& lp = params.layers[l];
      LayerCache lc;
      lc.x_in = x;

      lc.attn_in = cfg.pre_norm
                       ? layernorm_forward(x, lp.ln1_scale, lp.ln1_shift,
                                           lc.ln1_xhat, lc.ln1_inv_std)
                       : x;
      lc.q = linear(lc.attn_in, lp.wq, lp.bq);
      lc.k = linear(lc.attn_in, lp.wk, lp.bk);
      lc.v = linear(lc.attn_in, lp.wv, lp.bv);

      lc.ctx.resize(t_len, h);
      lc.probs.resize(cfg.heads);
      for (int head = 0; head < cfg.heads; ++head) {
        auto qh = lc.q.middleCols(head * dh, dh);
        auto kh = lc.k.middleCols(head * dh, dh);
        auto vh = lc.v.middleCols(head * dh, dh);
        MatrixXd scores = qh * kh.transpose() * inv_sqrt_dh;
        for (int j = 0; j < t_len; ++j)
          if (!attend[j]) scores.col(j).setConstant(kMaskedScore);
        MatrixXd& p = lc.probs[head];
        p.resize(t_len, t_len);
        for (int i = 0; i < t_len; ++i) {
          double mx = scores.row(i).maxCoeff();
          p.row(i) = (scores.row(i).array() - mx).exp().matrix();
          p.row(i) /= p.row(i).sum();
        }
        lc.ctx.middleCols(head * dh, dh) = p * vh;
      }
      MatrixXd attn_out = linear(lc.ctx, lp.wo, lp.bo);
      if (use_dropout) {
        lc.attn_drop = dropout_mask(t_len, h, cfg.dropout,
                                    mix64(dropout_seed, r, l * 2));
        attn_out = attn_out.cwiseProduct(lc.attn_drop);
      }

      MatrixXd a;
      if (cfg.pre_norm) {
        lc.res1 = x + attn_out;
        a = lc.res1;
        lc.ff_in = layernorm_forward(a, lp.ln2_scale, lp.ln2_shift, lc.ln2_xhat,
                                     lc.ln2_inv_std);
      } else {
        lc.res1 = x + attn_out;
        a = layernorm_forward(lc.res1, lp.ln1_scale, lp.ln1_shift, lc.ln1_xhat,
                              lc.ln1_inv_std);
        lc.ff_in = a;
      }

      lc.ff_pre = linear(lc.ff_in, lp.w1, lp.b1);
      MatrixXd ff_out = gelu(lc.ff_pre) * lp.w2;
      ff_out.rowwise() += lp.b2.transpose();
      if (use_dropout) {
        lc.ff_drop = dropout_mask(t_len, h, cfg.dropout,
                                  mix64(dropout_seed, r, l * 2 + 1));
        ff_out = ff_out.cwiseProduct(lc.ff_drop);
      }

      if (cfg.pre_norm) {
        x = a + ff_out;
      } else {
        MatrixXd s2 = a + ff_out;
        x = layernorm_forward(s2, lp.ln2_scale, lp.ln2_shift, lc.ln2_xhat,
                              lc.ln2_inv_std);
      }
      rc.layers.push_back(std::move(lc));
    }

    rc.final_in = x;
    rc.hidden = layernorm_forward(x, params.final_ln_scale, params.final_ln_shift,
                                  rc.final_xhat, rc.final_inv_std);

    MatrixXd logits =
        params.cfg.tie_mlm_head
            ? MatrixXd(rc.hidden * params.token_embed.transpose())
            : MatrixXd(rc.hidden * params.mlm_proj);
    logits.rowwise() += params.mlm_bias.transpose();

    result.hidden.push_back(rc.hidden);
    result.logits.push_back(std::move(logits));
    result.cache.rows.push_back(std::move(rc));
  }
  return result;
}

LossResult mlm_loss(const std::vector<Eigen::MatrixXd>& logits,
                    const std::vector<std::vector<int>>& labels) {
  if (logits.size() != labels.size())
    throw DataError("mlm loss: logits/labels row count mismatch");
  LossResult res;
  res.d_logits.reserve(logits.size());
  double total = 0.0;
  std::size_t count = 0;

  for (std::size_t r = 0; r < logits.size(); ++r) {
    const MatrixXd& lg = logits[r];
    if (static_cast<std::size_t>(lg.rows()) != labels[r].size())
      throw DataError("mlm loss: label length mismatch");
    res.d_logits.emplace_back(MatrixXd::Zero(lg.rows(), lg.cols()));
    for (Eigen::Index t = 0; t < lg.rows(); ++t) {
      int label = labels[r][t];
      if (label == kIgnoreLabel) continue;
      if (label < 0 || label >= lg.cols())
        throw DataError("mlm loss: label id outside vocabulary");
      double mx = lg.row(t).maxCoeff();
      Eigen::ArrayXd shifted = lg.row(t).transpose().array() - mx;
      double sum_exp = shifted.exp().sum();
      total += std::log(sum_exp) + mx - lg(t, label);
      res.d_logits[r].row(t) = (shifted.exp() / sum_exp).matrix().transpose();
      res.d_logits[r](t, label) -= 1.0;
      ++count;
    }
  }
  if (count == 0) throw DataError("mlm loss: no labeled positions");
  res.loss = total / static_cast<double>(count);
  res.labeled = count;
  for (auto& d : res.d_logits) d /= static_cast<double>(count);
  return res;
}

namespace {

// Shared by backward() and backward_from_hidden(): pushes d_hidden through
// the final norm, the blocks, and the embeddings.
void encoder_backward(const Parameters& params, const ActivationCache& cache,
                      const std::vector<MatrixXd>& d_hidden, Parameters& grads,
                      std::vector<MatrixXd>* d_embed_out) {
  const ModelConfig& cfg = params.cfg;
  const int h = cfg.hidden;
  const int dh = h / cfg.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool used_dropout = cache.mode == RunMode::kTrain && cfg.dropout > 0.0;

  if (d_hidden.size() != cache.rows.size())
    throw DataError("backward: gradient/cache row count mismatch");
  if (d_embed_out != nullptr) d_embed_out->clear();

  for (std::size_t r = 0; r < cache.rows.size(); ++r) {
    const RowCache& rc = cache.rows[r];
    if (d_hidden[r].rows() != rc.hidden.rows() ||
        d_hidden[r].cols() != rc.hidden.cols())
      throw DataError("backward: d_hidden shape mismatch");

    MatrixXd dx = layernorm_backward(d_hidden[r], rc.final_xhat,
                                     rc.final_inv_std, params.final_ln_scale,
                                     grads.final_ln_scale, grads.final_ln_shift);

    for (int l = cfg.layers - 1; l >= 0; --l) {
      const LayerParams& lp = params.layers[l];
      const LayerCache& lc = rc.layers[l];
      LayerParams& gl = grads.layers[l];

      MatrixXd da;  // gradient at the first residual sum (res1 in pre-norm)
      if (cfg.pre_norm) {
        da = dx;
        MatrixXd d_ffout = used_dropout ? dx.cwiseProduct(lc.ff_drop) : dx;
        MatrixXd act = gelu(lc.ff_pre);
        MatrixXd d_act = d_ffout * lp.w2.transpose();
        gl.w2 += act.transpose() * d_ffout;
        gl.b2 += d_ffout.colwise().sum().transpose();
        MatrixXd d_ffpre = d_act.cwiseProduct(gelu_grad(lc.ff_pre));
        MatrixXd d_ffin = d_ffpre * lp.w1.transpose();
        gl.w1 += lc.ff_in.transpose() * d_ffpre;
        gl.b1 += d_ffpre.colwise().sum().transpose();
        da += layernorm_backward(d_ffin, lc.ln2_xhat, lc.ln2_inv_std,
                                 lp.ln2_scale, gl.ln2_scale, gl.ln2_shift);
      } else {
        MatrixXd ds2 = layernorm_backward(dx, lc.ln2_xhat, lc.ln2_inv_std,
                                          lp.ln2_scale, gl.ln2_scale,
                                          gl.ln2_shift);
        da = ds2;
        MatrixXd d_ffout = used_dropout ? ds2.cwiseProduct(lc.ff_drop) : ds2;
        MatrixXd act = gelu(lc.ff_pre);
        MatrixXd d_act = d_ffout * lp.w2.transpose();
        gl.w2 += act.transpose() * d_ffout;
        gl.b2 += d_ffout.colwise().sum().transpose();
        MatrixXd d_ffpre = d_act.cwiseProduct(gelu_grad(lc.ff_pre));
        da += d_ffpre * lp.w1.transpose();
        gl.w1 += lc.ff_in.transpose() * d_ffpre;
        gl.b1 += d_ffpre.colwise().sum().transpose();
        da = layernorm_backward(da, lc.ln1_xhat, lc.ln1_inv_std, lp.ln1_scale,
                                gl.ln1_scale, gl.ln1_shift);
      }

      // At this point `da` is the gradient at x_in + drop(attn_out).
      MatrixXd d_attnout = used_dropout ? da.cwiseProduct(lc.attn_drop) : da;
      MatrixXd dctx = d_attnout * lp.wo.transpose();
      gl.wo += lc.ctx.transpose() * d_attnout;
      gl.bo += d_attnout.colwise().sum().transpose();

      MatrixXd dq(dctx.rows(), h), dk(dctx.rows(), h), dv(dctx.rows(), h);
      for (int head = 0; head < cfg.heads; ++head) {
        auto dctx_h = dctx.middleCols(head * dh, dh);
        auto qh = lc.q.middleCols(head * dh, dh);
        auto kh = lc.k.middleCols(head * dh, dh);
        auto vh = lc.v.middleCols(head * dh, dh);
        const MatrixXd& p = lc.probs[head];

        MatrixXd dp = dctx_h * vh.transpose();
        dv.middleCols(head * dh, dh) = p.transpose() * dctx_h;
        VectorXd row_dots = (dp.array() * p.array()).rowwise().sum().matrix();
        MatrixXd ds =
            (p.array() * (dp.array().colwise() - row_dots.array())).matrix();
        dq.middleCols(head * dh, dh) = ds * kh * inv_sqrt_dh;
        dk.middleCols(head * dh, dh) = ds.transpose() * qh * inv_sqrt_dh;
      }

      MatrixXd d_attnin = dq * lp.wq.transpose() + dk * lp.wk.transpose() +
                          dv * lp.wv.transpose();
      gl.wq += lc.attn_in.transpose() * dq;
      gl.bq += dq.colwise().sum().transpose();
      gl.wk += lc.attn_in.transpose() * dk;
      gl.bk += dk.colwise().sum().transpose();
      gl.wv += lc.attn_in.transpose() * dv;
      gl.bv += dv.colwise().sum().transpose();

      if (cfg.pre_norm) {
        dx = da + layernorm_backward(d_attnin, lc.ln1_xhat, lc.ln1_inv_std,
                                     lp.ln1_scale, gl.ln1_scale, gl.ln1_shift);
      } else {
        dx = da + d_attnin;
      }
    }

    // dx is now the gradient at the embedding sum.
    for (Eigen::Index t = 0; t < dx.rows(); ++t) {
      grads.token_embed.row(cache.input_ids[r][t]) += dx.row(t);
      grads.pos_embed.row(cache.positions[r][t]) += dx.row(t);
    }
    if (d_embed_out != nullptr) d_embed_out->push_back(std::move(dx));
  }
}

}  // namespace

Parameters backward(const Parameters& params, const ActivationCache& cache,
                    const std::vector<Eigen::MatrixXd>& d_logits) {
  const ModelConfig& cfg = params.cfg;
  Parameters grads = Parameters::zeros(cfg);
  if (d_logits.size() != cache.rows.size())
    throw DataError("backward: d_logits/cache row count mismatch");

  std::vector<MatrixXd> d_hidden;
  d_hidden.reserve(d_logits.size());
  for (std::size_t r = 0; r < d_logits.size(); ++r) {
    const MatrixXd& dl = d_logits[r];
    const MatrixXd& hidden = cache.rows[r].hidden;
    if (dl.rows() != hidden.rows() || dl.cols() != cfg.vocab_size)
      throw DataError("backward: d_logits shape mismatch");
    grads.mlm_bias += dl.colwise().sum().transpose();
    if (cfg.tie_mlm_head) {
      grads.token_embed += dl.transpose() * hidden;
      d_hidden.push_back(dl * params.token_embed);
    } else {
      grads.mlm_proj += hidden.transpose() * dl;
      d_hidden.push_back(dl * params.mlm_proj.transpose());
    }
  }
  encoder_backward(params, cache, d_hidden, grads, nullptr);
  return grads;
}

Parameters backward_from_hidden(const Parameters& params,
                                const ActivationCache& cache,
                                const std::vector<Eigen::MatrixXd>& d_hidden,
                                std::vector<Eigen::MatrixXd>* d_embed_out) {
  Parameters grads = Parameters::zeros(params.cfg);
  encoder_backward(params, cache, d_hidden, grads, d_embed_out);
  return grads;
}

Eigen::MatrixXd encode_tokens(const Parameters& params,
                              const std::vector<int>& ids) {
  if (ids.empty()) throw DataError("encode_tokens: empty sequence");
  MaskedBatch batch;
  batch.inputs.push_back(ids);
  batch.labels.emplace_back(ids.size(), kIgnoreLabel);
  batch.attention.emplace_back(ids.size(), true);
  std::vector<int> pos(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) pos[i] = static_cast<int>(i);
  batch.positions.push_back(std::move(pos));
  return forward(params, batch, RunMode::kEval).hidden[0];
}

}  // namespace mlmkit
