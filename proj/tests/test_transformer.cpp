#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "mlmkit/common.hpp"
#include "mlmkit/transformer.hpp"
#include "test_util.hpp"

using namespace mlmkit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.d_ff = 16;
  cfg.vocab_size = 12;
  cfg.max_positions = 16;
  cfg.dropout = 0.0;
  return cfg;
}

MaskedBatch fd_batch() {
  MaskedBatch b;
  b.inputs = {{2, 7, 5, 4, 3}, {2, 8, 11, 6, 3, 0}};
  b.labels = {{-1, 6, -1, 8, -1}, {-1, -1, 5, -1, 9, -1}};
  b.attention = {{true, true, true, true, true},
                 {true, true, true, true, true, false}};
  b.positions = {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4, 5}};
  return b;
}

struct TensorRef {
  std::string name;
  bool is_matrix = false;
  Eigen::MatrixXd* mat = nullptr;
  Eigen::VectorXd* vec = nullptr;
  Eigen::Index size() const { return mat ? mat->size() : vec->size(); }
  double* data() const { return mat ? mat->data() : vec->data(); }
};

std::vector<TensorRef> tensor_refs(Parameters& p) {
  std::vector<TensorRef> out;
  p.for_each_tensor([&](const std::string& name, bool is_matrix, auto& t) {
    TensorRef r;
    r.name = name;
    r.is_matrix = is_matrix;
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Eigen::MatrixXd>)
      r.mat = &t;
    else
      r.vec = &t;
    out.push_back(r);
  });
  return out;
}

// Gradient agreement: relative error against the symmetric bound, with an
// absolute floor so exactly-zero gradients compare against finite-difference
// noise sensibly.
bool grad_close(double analytic, double fd) {
  double rel =
      std::abs(analytic - fd) / (std::abs(analytic) + std::abs(fd) + 1e-10);
  return rel <= 1e-4 || (std::abs(analytic) <= 1e-8 && std::abs(fd) <= 1e-8);
}

// Central finite differences over the given entry indices of every tensor
// (all entries when `sample_per_tensor` is 0), checked against backward().
void check_gradients(Parameters& params, const MaskedBatch& batch, RunMode mode,
                     std::uint64_t dropout_seed, int sample_per_tensor) {
  auto loss_of = [&]() {
    auto fr = forward(params, batch, mode, dropout_seed);
    return mlm_loss(fr.logits, batch.labels).loss;
  };

  auto fr = forward(params, batch, mode, dropout_seed);
  auto lr = mlm_loss(fr.logits, batch.labels);
  Parameters grads = backward(params, fr.cache, lr.d_logits);

  auto prefs = tensor_refs(params);
  auto grefs = tensor_refs(grads);
  REQUIRE(prefs.size() == grefs.size());

  const double h = 1e-4;
  std::mt19937_64 pick(991);
  int failures = 0;
  for (std::size_t ti = 0; ti < prefs.size(); ++ti) {
    REQUIRE(prefs[ti].name == grefs[ti].name);
    std::vector<Eigen::Index> idx;
    if (sample_per_tensor == 0) {
      idx.resize(prefs[ti].size());
      for (Eigen::Index i = 0; i < prefs[ti].size(); ++i) idx[i] = i;
    } else {
      std::uniform_int_distribution<Eigen::Index> dist(0, prefs[ti].size() - 1);
      for (int i = 0; i < sample_per_tensor; ++i) idx.push_back(dist(pick));
    }
    for (Eigen::Index i : idx) {
      double* slot = prefs[ti].data() + i;
      double saved = *slot;
      *slot = saved + h;
      double up = loss_of();
      *slot = saved - h;
      double down = loss_of();
      *slot = saved;
      double fd = (up - down) / (2.0 * h);
      double analytic = grefs[ti].data()[i];
      if (!grad_close(analytic, fd)) {
        ++failures;
        CAPTURE(prefs[ti].name);
        CAPTURE(i);
        CAPTURE(analytic);
        CAPTURE(fd);
        CHECK(grad_close(analytic, fd));
      }
    }
  }
  CHECK(failures == 0);
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(tiny_config().validate());
  ModelConfig bad = tiny_config();
  bad.hidden = 10;  // not divisible by heads=2? 10/2=5 fine; break differently
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = tiny_config();
  bad.d_ff = 4;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = tiny_config();
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = tiny_config();
  bad.vocab_size = 5;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = tiny_config();
  bad.layers = -1;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("preset shapes") {
  ModelConfig b = ModelConfig::base(50005);
  CHECK(b.layers == 12);
  CHECK(b.hidden == 768);
  CHECK(b.heads == 12);
  CHECK(b.d_ff == 3072);
  ModelConfig l = ModelConfig::large(50005);
  CHECK(l.layers == 24);
  CHECK(l.hidden == 1024);
  CHECK(l.heads == 16);
  ModelConfig t = ModelConfig::toy(500);
  CHECK(t.layers == 2);
  CHECK(t.hidden == 64);
  CHECK(t.heads == 4);
  CHECK(t.d_ff == 256);
  CHECK(t.max_positions == 128);
}

TEST_CASE("parameter count matches tensor enumeration") {
  for (bool tied : {true, false}) {
    ModelConfig cfg = ModelConfig::toy(300);
    cfg.tie_mlm_head = tied;
    Parameters p = Parameters::zeros(cfg);
    std::int64_t enumerated = 0;
    p.for_each_tensor([&](const std::string&, bool, const auto& t) {
      enumerated += static_cast<std::int64_t>(t.size());
    });
    CHECK(enumerated == count_parameters(cfg));
  }
}

TEST_CASE("base size lands in the expected band") {
  std::int64_t n = count_parameters(ModelConfig::base(50005));
  CHECK(n >= 110'000'000);
  CHECK(n <= 150'000'000);
}

TEST_CASE("zero-layer model degenerates to embeddings plus head") {
  ModelConfig cfg = tiny_config();
  cfg.layers = 0;
  std::int64_t expect = std::int64_t(cfg.vocab_size) * cfg.hidden +
                        std::int64_t(cfg.max_positions) * cfg.hidden +
                        2 * cfg.hidden + cfg.vocab_size;
  CHECK(count_parameters(cfg) == expect);

  Parameters p = init_parameters(cfg, 7);
  auto fr = forward(p, fd_batch(), RunMode::kEval);
  CHECK(fr.logits[0].rows() == 5);
  CHECK(fr.logits[0].cols() == cfg.vocab_size);
  auto lr = mlm_loss(fr.logits, fd_batch().labels);
  CHECK(std::isfinite(lr.loss));
}

TEST_CASE("initialization statistics") {
  ModelConfig cfg = ModelConfig::toy(300);
  Parameters p = init_parameters(cfg, 123);

  double sum = 0.0, sq = 0.0;
  std::int64_t n = 0;
  p.for_each_tensor([&](const std::string&, bool is_matrix, const auto& t) {
    if (!is_matrix) return;
    sum += t.sum();
    sq += t.array().square().sum();
    n += t.size();
  });
  REQUIRE(n >= 100'000);
  double mean = sum / n;
  double stddev = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(stddev - 0.02) < 0.002);

  // Norm scales start at one, everything vector-shaped otherwise at zero.
  p.for_each_tensor([&](const std::string& name, bool is_matrix, const auto& t) {
    if (is_matrix) return;
    if (name.find("ln") != std::string::npos &&
        name.find("scale") != std::string::npos) {
      CHECK(t.minCoeff() == 1.0);
      CHECK(t.maxCoeff() == 1.0);
    } else {
      CHECK(t.cwiseAbs().maxCoeff() == 0.0);
    }
  });

  // Seeds matter and reruns do not.
  Parameters again = init_parameters(cfg, 123);
  CHECK(again.token_embed == p.token_embed);
  Parameters other = init_parameters(cfg, 124);
  CHECK(other.token_embed != p.token_embed);
}

TEST_CASE("mlm loss on uniform logits is log vocab size") {
  int v = 37;
  std::vector<MatrixXd> logits{MatrixXd::Zero(4, v)};
  std::vector<std::vector<int>> labels{{5, -1, 12, 0}};
  auto lr = mlm_loss(logits, labels);
  CHECK(lr.labeled == 3);
  CHECK(lr.loss == doctest::Approx(std::log(double(v))).epsilon(1e-12));
}

TEST_CASE("mlm loss matches a naive reference") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> normal(0.0, 3.0);
  int v = 23;
  std::vector<MatrixXd> logits;
  std::vector<std::vector<int>> labels;
  for (int r = 0; r < 3; ++r) {
    MatrixXd lg(6, v);
    for (int i = 0; i < lg.size(); ++i) lg.data()[i] = normal(rng);
    logits.push_back(lg);
    labels.push_back({r, -1, 2 * r + 1, -1, -1, 20 - r});
  }
  auto lr = mlm_loss(logits, labels);

  double naive = 0.0;
  int count = 0;
  for (std::size_t r = 0; r < logits.size(); ++r)
    for (int t = 0; t < 6; ++t) {
      int lab = labels[r][t];
      if (lab < 0) continue;
      double denom = 0.0;
      for (int j = 0; j < v; ++j) denom += std::exp(logits[r](t, j));
      naive += -std::log(std::exp(logits[r](t, lab)) / denom);
      ++count;
    }
  naive /= count;
  CHECK(lr.loss == doctest::Approx(naive).epsilon(1e-8));

  SUBCASE("loss gradient agrees with finite differences") {
    const double h = 1e-6;
    std::mt19937_64 pick(9);
    std::uniform_int_distribution<int> rdist(0, 2), tdist(0, 5), vdist(0, v - 1);
    for (int k = 0; k < 40; ++k) {
      int r = rdist(pick), t = tdist(pick), j = vdist(pick);
      double saved = logits[r](t, j);
      logits[r](t, j) = saved + h;
      double up = mlm_loss(logits, labels).loss;
      logits[r](t, j) = saved - h;
      double down = mlm_loss(logits, labels).loss;
      logits[r](t, j) = saved;
      double fd = (up - down) / (2 * h);
      CHECK(lr.d_logits[r](t, j) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("mlm loss rejects degenerate inputs") {
  std::vector<MatrixXd> logits{MatrixXd::Zero(3, 10)};
  std::vector<std::vector<int>> none{{-1, -1, -1}};
  CHECK_THROWS_AS(mlm_loss(logits, none), DataError);
  std::vector<std::vector<int>> oob{{-1, 10, -1}};
  CHECK_THROWS_AS(mlm_loss(logits, oob), DataError);
  std::vector<std::vector<int>> short_labels{{-1, 3}};
  CHECK_THROWS_AS(mlm_loss(logits, short_labels), DataError);
}

TEST_CASE("gradients match finite differences exhaustively on a tiny model") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 42);
  MaskedBatch batch = fd_batch();
  check_gradients(p, batch, RunMode::kEval, 0, /*sample_per_tensor=*/0);
}

TEST_CASE("gradients match finite differences with an untied head") {
  ModelConfig cfg = tiny_config();
  cfg.tie_mlm_head = false;
  Parameters p = init_parameters(cfg, 43);
  MaskedBatch batch = fd_batch();
  check_gradients(p, batch, RunMode::kEval, 0, /*sample_per_tensor=*/6);
}

TEST_CASE("gradients match finite differences in post-norm mode") {
  ModelConfig cfg = tiny_config();
  cfg.pre_norm = false;
  Parameters p = init_parameters(cfg, 44);
  MaskedBatch batch = fd_batch();
  check_gradients(p, batch, RunMode::kEval, 0, /*sample_per_tensor=*/6);
}

TEST_CASE("gradients match finite differences under seeded dropout") {
  ModelConfig cfg = tiny_config();
  cfg.dropout = 0.25;
  Parameters p = init_parameters(cfg, 45);
  MaskedBatch batch = fd_batch();
  check_gradients(p, batch, RunMode::kTrain, 777, /*sample_per_tensor=*/5);
}

TEST_CASE("gradients match finite differences on the toy preset") {
  ModelConfig cfg = ModelConfig::toy(50);
  cfg.dropout = 0.0;
  Parameters p = init_parameters(cfg, 46);
  MaskedBatch batch = fd_batch();
  check_gradients(p, batch, RunMode::kEval, 0, /*sample_per_tensor=*/4);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 47);
  MaskedBatch batch = fd_batch();
  auto fr = forward(p, batch, RunMode::kEval);
  std::vector<MatrixXd> zeros;
  for (const auto& lg : fr.logits) zeros.emplace_back(MatrixXd::Zero(lg.rows(), lg.cols()));
  Parameters grads = backward(p, fr.cache, zeros);
  grads.for_each_tensor([&](const std::string& name, bool, const auto& t) {
    CAPTURE(name);
    CHECK(t.cwiseAbs().maxCoeff() == 0.0);
  });
}

TEST_CASE("unused token embeddings get no gradient when the head is untied") {
  ModelConfig cfg = tiny_config();
  cfg.tie_mlm_head = false;
  Parameters p = init_parameters(cfg, 48);
  MaskedBatch batch = fd_batch();  // id 10 never appears as an input
  auto fr = forward(p, batch, RunMode::kTrain, 5);
  auto lr = mlm_loss(fr.logits, batch.labels);
  Parameters grads = backward(p, fr.cache, lr.d_logits);
  CHECK(grads.token_embed.row(10).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.token_embed.row(7).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("attention rows are distributions and padded keys get zero weight") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 49);
  MaskedBatch b;
  b.inputs = {{2, 6, 9, 0, 0}};
  b.labels = {{-1, -1, -1, -1, -1}};
  b.attention = {{true, true, true, false, false}};
  b.positions = {{0, 1, 2, 3, 4}};
  auto fr = forward(p, b, RunMode::kEval);
  for (int l = 0; l < cfg.layers; ++l) {
    const LayerCache& lc = fr.cache.rows[0].layers[l];
    for (int head = 0; head < cfg.heads; ++head) {
      const MatrixXd& probs = lc.probs[head];
      for (int i = 0; i < probs.rows(); ++i) {
        CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(probs(i, 3) == 0.0);
        CHECK(probs(i, 4) == 0.0);
      }
      CHECK(probs.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("padding does not disturb real positions") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 50);

  MaskedBatch plain;
  plain.inputs = {{2, 6, 9, 4, 3}};
  plain.labels = {{-1, -1, -1, -1, -1}};
  plain.attention = {{true, true, true, true, true}};
  plain.positions = {{0, 1, 2, 3, 4}};

  MaskedBatch padded = plain;
  padded.inputs[0].insert(padded.inputs[0].end(), {0, 0});
  padded.labels[0].insert(padded.labels[0].end(), {-1, -1});
  padded.attention[0].insert(padded.attention[0].end(), {false, false});
  padded.positions[0].insert(padded.positions[0].end(), {5, 6});

  auto a = forward(p, plain, RunMode::kEval);
  auto b = forward(p, padded, RunMode::kEval);
  for (int t = 0; t < 5; ++t)
    for (int j = 0; j < cfg.vocab_size; ++j)
      CHECK(a.logits[0](t, j) ==
            doctest::Approx(b.logits[0](t, j)).epsilon(1e-12));
}

TEST_CASE("positions carry order: permuting tokens with their positions") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 51);

  std::vector<int> ids = {2, 7, 5, 9, 11, 4, 3};
  std::vector<int> perm = {3, 0, 6, 2, 5, 1, 4};

  MaskedBatch plain;
  plain.inputs = {ids};
  plain.labels = {std::vector<int>(ids.size(), -1)};
  plain.attention = {std::vector<bool>(ids.size(), true)};
  plain.positions = {{0, 1, 2, 3, 4, 5, 6}};

  MaskedBatch shuffled;
  std::vector<int> sids(ids.size()), spos(ids.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    sids[i] = ids[perm[i]];
    spos[i] = perm[i];
  }
  shuffled.inputs = {sids};
  shuffled.labels = {std::vector<int>(ids.size(), -1)};
  shuffled.attention = {std::vector<bool>(ids.size(), true)};
  shuffled.positions = {spos};

  auto a = forward(p, plain, RunMode::kEval);
  auto b = forward(p, shuffled, RunMode::kEval);
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (int h = 0; h < cfg.hidden; ++h)
      CHECK(b.hidden[0](Eigen::Index(i), h) ==
            doctest::Approx(a.hidden[0](perm[i], h)).epsilon(1e-6));
}

TEST_CASE("forward is deterministic") {
  ModelConfig cfg = tiny_config();
  cfg.dropout = 0.1;
  Parameters p = init_parameters(cfg, 52);
  MaskedBatch batch = fd_batch();

  auto a = forward(p, batch, RunMode::kTrain, 31);
  auto b = forward(p, batch, RunMode::kTrain, 31);
  CHECK(a.logits[0] == b.logits[0]);
  CHECK(a.logits[1] == b.logits[1]);

  auto c = forward(p, batch, RunMode::kTrain, 32);
  CHECK(a.logits[0] != c.logits[0]);

  auto e = forward(p, batch, RunMode::kEval, 31);
  CHECK(a.logits[0] != e.logits[0]);
  auto e2 = forward(p, batch, RunMode::kEval, 99);  // seed ignored in eval
  CHECK(e.logits[0] == e2.logits[0]);
}

TEST_CASE("dropout masks are inverted-scale bernoulli") {
  ModelConfig cfg = tiny_config();
  cfg.dropout = 0.25;
  Parameters p = init_parameters(cfg, 53);
  MaskedBatch batch = fd_batch();
  auto fr = forward(p, batch, RunMode::kTrain, 11);
  const MatrixXd& mask = fr.cache.rows[0].layers[0].attn_drop;
  REQUIRE(mask.size() > 0);
  double keep = 1.0 / 0.75;
  for (int i = 0; i < mask.size(); ++i) {
    bool ok = mask.data()[i] == 0.0 || mask.data()[i] == keep;
    CHECK(ok);
  }
  // Eval caches no masks.
  auto ev = forward(p, batch, RunMode::kEval);
  CHECK(ev.cache.rows[0].layers[0].attn_drop.size() == 0);
}

TEST_CASE("cache exposes per-layer states") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 54);
  MaskedBatch batch = fd_batch();
  auto fr = forward(p, batch, RunMode::kEval);
  const auto& cache = fr.cache;
  CHECK(&cache.states_after(0, 0) == &cache.rows[0].embed_out);
  CHECK(&cache.states_after(0, cfg.layers) == &cache.rows[0].final_in);
  CHECK(&cache.states_after(1, 1) == &cache.rows[1].layers[1].x_in);
  CHECK_THROWS_AS(cache.states_after(0, cfg.layers + 1), DataError);
  CHECK(cache.states_after(0, 0).rows() == 5);
  CHECK(cache.states_after(0, 0).cols() == cfg.hidden);
}

TEST_CASE("task-head gradient path matches finite differences") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 55);
  MaskedBatch batch = fd_batch();

  // Scalar probe loss: inner product of the final hidden states with fixed
  // random coefficients.
  std::mt19937_64 rng(400);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MatrixXd> probe;
  for (const auto& ids : batch.inputs) {
    MatrixXd r(ids.size(), cfg.hidden);
    for (int i = 0; i < r.size(); ++i) r.data()[i] = normal(rng);
    probe.push_back(r);
  }
  auto loss_of = [&]() {
    auto fr = forward(p, batch, RunMode::kEval);
    double s = 0.0;
    for (std::size_t r = 0; r < probe.size(); ++r)
      s += (fr.hidden[r].array() * probe[r].array()).sum();
    return s;
  };

  auto fr = forward(p, batch, RunMode::kEval);
  std::vector<MatrixXd> d_embed;
  Parameters grads = backward_from_hidden(p, fr.cache, probe, &d_embed);

  REQUIRE(d_embed.size() == 2);
  CHECK(d_embed[0].rows() == 5);
  CHECK(d_embed[0].cols() == cfg.hidden);

  // Token id 11 appears exactly once (row 1, slot 2): its embedding gradient
  // must equal that single d_embed row because no head ties back into it.
  CHECK(grads.token_embed.row(11) == d_embed[1].row(2));

  auto prefs = tensor_refs(p);
  auto grefs = tensor_refs(grads);
  const double h = 1e-4;
  std::mt19937_64 pick(66);
  for (std::size_t ti = 0; ti < prefs.size(); ++ti) {
    std::uniform_int_distribution<Eigen::Index> dist(0, prefs[ti].size() - 1);
    for (int k = 0; k < 4; ++k) {
      Eigen::Index i = dist(pick);
      double* slot = prefs[ti].data() + i;
      double saved = *slot;
      *slot = saved + h;
      double up = loss_of();
      *slot = saved - h;
      double down = loss_of();
      *slot = saved;
      double fd = (up - down) / (2 * h);
      CAPTURE(prefs[ti].name);
      CAPTURE(i);
      CHECK(grad_close(grefs[ti].data()[i], fd));
    }
  }
}

TEST_CASE("encode_tokens returns the eval-mode final hidden states") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 56);
  std::vector<int> ids = {2, 5, 7, 3};

  MatrixXd enc = encode_tokens(p, ids);
  CHECK(enc.rows() == 4);
  CHECK(enc.cols() == cfg.hidden);

  MaskedBatch b;
  b.inputs = {ids};
  b.labels = {{-1, -1, -1, -1}};
  b.attention = {{true, true, true, true}};
  b.positions = {{0, 1, 2, 3}};
  auto fr = forward(p, b, RunMode::kEval);
  CHECK(enc == fr.hidden[0]);

  // Context reaches every position: change one token, all vectors move.
  MatrixXd other = encode_tokens(p, {2, 5, 9, 3});
  for (int t = 0; t < 4; ++t) CHECK((enc.row(t) - other.row(t)).norm() > 0.0);

  CHECK_THROWS_AS(encode_tokens(p, {}), DataError);
}

TEST_CASE("forward rejects malformed rows") {
  ModelConfig cfg = tiny_config();
  Parameters p = init_parameters(cfg, 57);
  MaskedBatch b = fd_batch();
  b.inputs[0][1] = cfg.vocab_size;  // out of vocabulary
  CHECK_THROWS_AS(forward(p, b, RunMode::kEval), DataError);
  b = fd_batch();
  b.positions[0][2] = cfg.max_positions;
  CHECK_THROWS_AS(forward(p, b, RunMode::kEval), DataError);
  b = fd_batch();
  b.inputs.push_back({});
  b.labels.push_back({});
  b.attention.push_back({});
  b.positions.push_back({});
  CHECK_THROWS_AS(forward(p, b, RunMode::kEval), DataError);
}

TEST_CASE("logits reproduce the recorded reference run") {
  ModelConfig cfg = tiny_config();
  cfg.vocab_size = 20;
  Parameters p = init_parameters(cfg, 20240317);

  MaskedBatch b;
  b.inputs = {{2, 7, 5, 9, 11, 3}};
  b.labels = {{-1, -1, -1, -1, -1, -1}};
  b.attention = {std::vector<bool>(6, true)};
  b.positions = {{0, 1, 2, 3, 4, 5}};
  auto fr = forward(p, b, RunMode::kEval);
  const MatrixXd& lg = fr.logits[0];

  std::string path = testutil::data_path("logits_golden.tsv");
  if (std::getenv("MLMKIT_WRITE_GOLDEN") != nullptr) {
    std::ofstream out(path);
    out.precision(17);
    for (int t = 0; t < lg.rows(); ++t) {
      for (int j = 0; j < lg.cols(); ++j)
        out << (j ? "\t" : "") << lg(t, j);
      out << "\n";
    }
    MESSAGE("wrote " << path);
    return;
  }

  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing golden file " << path);
  for (int t = 0; t < lg.rows(); ++t) {
    std::string line;
    REQUIRE(static_cast<bool>(std::getline(in, line)));
    std::istringstream ss(line);
    for (int j = 0; j < lg.cols(); ++j) {
      double want;
      REQUIRE(static_cast<bool>(ss >> want));
      CHECK(lg(t, j) == want);
    }
  }
}
