#include <cmath>

#include "doctest.h"
#include "lstme/error.hpp"
#include "lstme/gradcheck.hpp"
#include "lstme/harness.hpp"
#include "lstme/metrics.hpp"
#include "lstme/model.hpp"
#include "oracles.hpp"

using namespace lstme;

namespace {

GradcheckProblem small_problem(std::uint64_t seed) { return random_problem(5, 4, 6, 9, 5, seed); }

} // namespace

TEST_CASE("forward_pair lambda endpoints")
{
  auto const prob = small_problem(1);
  auto const &pair = prob.pairs[0];
  auto const one = forward_pair(prob.params, pair.video, pair.tokens, 1.0);
  CHECK(one.loss.total == one.loss.nll);
  auto const zero = forward_pair(prob.params, pair.video, pair.tokens, 0.0);
  CHECK(zero.loss.total == zero.loss.relevance);
  CHECK(one.loss.relevance > 0);
}

TEST_CASE("forward_pair matches scalar oracle")
{
  auto p = ModelParams::zeros(3, 2, 2, 4);
  double w = 0.05;
  p.for_each_block([&](std::string_view, auto &b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b.data()[i] = w;
      w = -w * 1.1 + 0.013;
    }
  });
  Vec64 v(3);
  v << 0.4, -1.2, 0.7;
  TokenSeq const tokens{kStart, 3, kEnd};
  for (double lambda : {0.0, 0.3, 0.7, 1.0}) {
    auto const got = forward_pair(p, v, tokens, lambda).loss;
    auto const want = oracle::pair_loss(p, v, tokens, lambda);
    CHECK(std::abs(got.nll - want.nll) <= 1e-12);
    CHECK(std::abs(got.relevance - want.relevance) <= 1e-12);
    CHECK(std::abs(got.total - want.total) <= 1e-12);
  }

  auto const prob = random_problem(4, 3, 5, 7, 6, 4);
  auto const got = forward_pair(prob.params, prob.pairs[0].video, prob.pairs[0].tokens, 0.7).loss;
  auto const want = oracle::pair_loss(prob.params, prob.pairs[0].video, prob.pairs[0].tokens, 0.7);
  CHECK(std::abs(got.total - want.total) <= 1e-12);
}

TEST_CASE("token validation")
{
  auto const prob = small_problem(2);
  Vec64 const &v = prob.pairs[0].video;
  CHECK_THROWS_AS(forward_pair(prob.params, v, {kStart}, 0.7), InvalidInput);
  CHECK_THROWS_AS(forward_pair(prob.params, v, {3, 4, kEnd}, 0.7), InvalidInput);
  CHECK_THROWS_AS(forward_pair(prob.params, v, {kStart, 4, 5}, 0.7), InvalidInput);
  CHECK_THROWS_AS(forward_pair(prob.params, v, {kStart, 9, kEnd}, 0.7), InvalidInput);
  CHECK_THROWS_AS(forward_pair(prob.params, v, {kStart, kEnd, 4, kEnd}, 0.7), InvalidInput);
  CHECK_THROWS_AS(forward_pair(prob.params, Vec64::Zero(4), {kStart, 4, kEnd}, 0.7), InvalidInput);
  CHECK_NOTHROW(forward_pair(prob.params, v, {kStart, kEnd}, 0.7));
}

TEST_CASE("gradients match finite differences")
{
  for (double lambda : {0.0, 0.5, 0.7, 1.0}) {
    CAPTURE(lambda);
    auto const prob = small_problem(3);
    auto const report = gradient_check(prob.params, prob.pairs, lambda, 0.0);
    CHECK(report.max_rel_error <= 1e-4);
    auto const reg = gradient_check(prob.params, prob.pairs, lambda, 1e-4);
    CHECK(reg.max_rel_error <= 1e-4);
    CHECK(reg.blocks.size() == 15);
  }

  auto prob = random_problem(4, 3, 3, 6, 4, 5);
  auto extra = random_problem(4, 3, 3, 6, 6, 6);
  prob.pairs.push_back(extra.pairs[0]);
  CHECK(gradient_check(prob.params, prob.pairs, 0.7, 1e-3).pass);
}

TEST_CASE("gradient check negative control")
{
  auto const prob = small_problem(7);
  auto const report = gradient_check(prob.params, prob.pairs, 0.7, 1e-4, 1e-5, 1e-4,
                                     [](ModelParams &g) { g.softmax(0, 0) += 1.0; });
  CHECK_FALSE(report.pass);
}

TEST_CASE("backward_pair endpoint structure")
{
  auto const prob = small_problem(8);
  auto const &pair = prob.pairs[0];

  auto const f0 = forward_pair(prob.params, pair.video, pair.tokens, 0.0);
  auto const g0 = backward_pair(prob.params, pair.video, pair.tokens, 0.0, f0);
  g0.lstm.for_each_block([](std::string_view, auto const &b) { CHECK(b.isZero()); });
  CHECK(g0.softmax.isZero());
  auto const rel = relevance_grad(prob.params.emb, pair.video, f0.tf);
  CHECK(g0.emb.video == rel.video);
  CHECK(g0.emb.word == rel.word);

  // Relevance contributes nothing at lambda=1: Tv's gradient is the LSTM input
  // gradient at the video step times vT.
  auto const f1 = forward_pair(prob.params, pair.video, pair.tokens, 1.0);
  auto const g1 = backward_pair(prob.params, pair.video, pair.tokens, 1.0, f1);
  std::vector<Vec64> dh;
  dh.push_back(Vec64::Zero(prob.params.hidden_dim()));
  for (std::size_t t = 0; t + 1 < pair.tokens.size(); ++t) {
    Vec64 d = f1.probs[t];
    d[pair.tokens[t + 1]] -= 1.0;
    dh.push_back(prob.params.softmax.transpose() * d);
  }
  auto const lg = sequence_backward(prob.params.lstm, f1.tape, dh);
  Mat64 const expected = lg.dx[0] * pair.video.transpose();
  CHECK((g1.emb.video - expected).cwiseAbs().maxCoeff() <= 1e-14);

  PairForward wrong = f1;
  wrong.tape.pop_back();
  CHECK_THROWS_AS(backward_pair(prob.params, pair.video, pair.tokens, 1.0, wrong), InvalidInput);
}

TEST_CASE("objective")
{
  auto a = random_problem(4, 3, 3, 6, 4, 10);
  auto b = random_problem(4, 3, 3, 6, 5, 11);
  auto const &p = a.params;
  double const single = objective(p, a.pairs, 0.7, 0.0);
  CHECK(single == forward_pair(p, a.pairs[0].video, a.pairs[0].tokens, 0.7).loss.total);

  auto const zero = ModelParams::zeros(4, 3, 3, 6);
  CHECK(objective(zero, a.pairs, 0.7, 1.0) == objective(zero, a.pairs, 0.7, 0.0));

  std::vector<TrainingPair> both{a.pairs[0], b.pairs[0]};
  double const t1 = oracle::pair_loss(p, a.pairs[0].video, a.pairs[0].tokens, 0.7).total;
  double const t2 = oracle::pair_loss(p, b.pairs[0].video, b.pairs[0].tokens, 0.7).total;
  double sq = 0;
  p.for_each_block([&](std::string_view, auto const &m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) sq += m.data()[i] * m.data()[i];
  });
  CHECK(std::abs(objective(p, both, 0.7, 0.01) - ((t1 + t2) / 2 + 0.01 * sq)) <= 1e-12);

  CHECK_THROWS_AS(objective(p, {}, 0.7, 0.0), InvalidInput);
}

TEST_CASE("sgd_step")
{
  auto p = ModelParams::zeros(1, 1, 1, 4);
  p.softmax(0, 0) = 5.0;
  auto const before = p;
  auto g = p.zeros_like();
  sgd_step(p, g, 0.1, 5.0);
  CHECK(p.softmax == before.softmax);

  g.softmax(0, 0) = 2.0;
  sgd_step(p, g, 1.0, std::nullopt);
  CHECK(p.softmax(0, 0) == 3.0);

  // Norm 10 clipped to 1: the applied update has norm lr * 1.
  auto q = random_problem(3, 2, 2, 5, 4, 12).params;
  auto const q0 = q;
  auto dir = q.zeros_like();
  dir.softmax(0, 0) = 6.0;
  dir.emb.video(0, 0) = 8.0;
  double const norm = sgd_step(q, dir, 0.05, 1.0);
  CHECK(norm == doctest::Approx(10.0).epsilon(1e-15));
  auto diff = q;
  diff.add_scaled(q0, -1.0);
  CHECK(std::sqrt(diff.squared_norm()) == doctest::Approx(0.05).epsilon(1e-12));

  auto bad = q.zeros_like();
  bad.lstm.in.bias[0] = std::nan("");
  CHECK_THROWS_AS(sgd_step(q, bad, 0.05, 1.0), NumericError);
}

TEST_CASE("train")
{
  Hyperparams hp;
  hp.embed = 8;
  hp.hidden = 8;
  hp.lr = 0.05;
  hp.batch_size = 2;
  hp.seed = 3;
  std::vector<TrainingPair> pairs;
  for (int k = 0; k < 5; ++k) pairs.push_back(random_problem(6, 8, 8, 10, 4 + k % 3, 20 + k).pairs[0]);
  hp.video_dim = 6;
  hp.vocab = 10;
  auto const p0 = init_model(hp);

  hp.epochs = 0;
  auto const none = train(p0, pairs, hp);
  CHECK(none.trace.empty());
  CHECK(none.params.softmax == p0.softmax);
  CHECK(none.params.lstm.cell.input == p0.lstm.cell.input);

  hp.epochs = 200;
  double const initial = objective(p0, pairs, hp.lambda, hp.mu);
  auto const r1 = train(p0, pairs, hp);
  REQUIRE(r1.trace.size() == 200);
  CHECK(objective(r1.params, pairs, hp.lambda, hp.mu) < initial);
  CHECK(r1.trace.back().objective < r1.trace.front().objective);

  auto const r2 = train(p0, pairs, hp);
  for (std::size_t e = 0; e < r1.trace.size(); ++e) {
    CHECK(r1.trace[e].objective == r2.trace[e].objective);
    CHECK(r1.trace[e].nll == r2.trace[e].nll);
  }

  hp.lr = 1e300;
  hp.clip.reset();
  hp.epochs = 5;
  CHECK_THROWS_AS(train(p0, pairs, hp), NumericError);
}

TEST_CASE("greedy_decode")
{
  auto p = ModelParams::zeros(2, 2, 2, 6);
  Vec64 const v = Vec64::Ones(2);
  p.lstm.out.bias.setConstant(1.0);
  p.lstm.cell.bias.setConstant(1.0);
  p.lstm.in.bias.setConstant(1.0);
  // h is positive on every step, so row weights order the logits.
  p.softmax.row(kEnd).setConstant(3.0);
  p.softmax.row(4).setConstant(1.0);
  auto const ended = greedy_decode(p, v, 10);
  CHECK(ended.tokens == TokenSeq{kEnd});
  CHECK_FALSE(ended.truncated);
  CHECK(ended.probs.size() == 1);

  p.softmax.setZero();
  p.softmax.row(2).setConstant(2.0);
  p.softmax.row(5).setConstant(2.0);
  auto const tie = greedy_decode(p, v, 3);
  CHECK(tie.tokens == TokenSeq{2, 2, 2});
  CHECK(tie.truncated);

  CHECK_THROWS_AS(greedy_decode(p, Vec64::Ones(3), 3), InvalidInput);
}

TEST_CASE("count_params")
{
  Hyperparams hp;
  hp.video_dim = 1;
  hp.embed = 1;
  hp.hidden = 1;
  hp.vocab = 1;
  CHECK(count_params(hp) == 15);

  for (auto [dv, de, dh, v] : {std::tuple{7, 3, 5, 11}, std::tuple{2, 9, 4, 6}}) {
    hp.video_dim = dv;
    hp.embed = de;
    hp.hidden = dh;
    hp.vocab = v;
    std::int64_t brute = 0;
    ModelParams::zeros(dv, de, dh, v).for_each_block([&](std::string_view, auto const &b) { brute += b.size(); });
    CHECK(count_params(hp) == brute);
  }

  // Table 3 at De = Dh in {128, 256, 512}: 3.6M, 7.5M, 16.0M. 8192-dim video
  // features; the vocabulary size is not reported and is taken as 9450.
  hp.video_dim = 8192;
  hp.vocab = 9450;
  std::vector<double> const table{3.6, 7.5, 16.0};
  int i = 0;
  for (int h : {128, 256, 512}) {
    hp.embed = h;
    hp.hidden = h;
    double const millions = static_cast<double>(count_params(hp)) / 1e6;
    CHECK(std::abs(millions - table[i++]) <= 0.05);
  }
}

TEST_CASE("memorization of a tiny corpus")
{
  SyntheticSpec spec;
  spec.subjects = {"dog", "cat", "man", "woman", "boy"};
  spec.verbs = {"run", "eat", "ride", "play", "cut"};
  spec.objects = {"ball", "apple", "bike", "guitar", "onion"};
  spec.count = 5;
  auto const records = synth_generate(spec);
  Hyperparams hp;
  hp.embed = 32;
  hp.hidden = 32;
  hp.batch_size = 1;
  hp.epochs = 500;
  auto const model = train_on(records, hp, 1);
  auto const pairs = decode_for_eval(model.checkpoint.params, model.vocab, records, hp.max_len);
  for (std::size_t k = 0; k < pairs.size(); ++k) CHECK(pairs[k].hypothesis == pairs[k].references[0]);
  CHECK(bleu_corpus(pairs).score[3] == 1.0);
}
