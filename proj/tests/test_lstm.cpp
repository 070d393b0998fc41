#include <cmath>

#include "doctest.h"
#include "lstme/error.hpp"
#include "lstme/lstm.hpp"
#include "oracles.hpp"

using namespace lstme;

namespace {

Vec64 random_vec(Rng &rng, Eigen::Index n)
{
  Vec64 v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1, 1);
  return v;
}

LstmParams<double> random_params(Eigen::Index de, Eigen::Index dh, std::uint64_t seed, double scale = 0.5)
{
  auto p = LstmParams<double>::zeros(de, dh);
  Rng rng(seed);
  p.for_each_block([&](std::string_view, auto &b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-scale, scale);
  });
  return p;
}

// L = sum_t <w[t], h[t]>
double weighted_sum(LstmParams<double> const &p, std::vector<Vec64> const &xs, std::vector<Vec64> const &w)
{
  auto const seq = sequence_forward(p, xs, LstmState<double>::zeros(p.hidden_dim()));
  double total = 0;
  for (std::size_t t = 0; t < w.size(); ++t) total += w[t].dot(seq.states[t].h);
  return total;
}

} // namespace

TEST_CASE("cell_forward fixed cases")
{
  auto const zero = LstmParams<double>::zeros(3, 2);
  auto [state, step] = cell_forward(zero, Vec64(Vec64::Zero(3)), LstmState<double>::zeros(2));
  CHECK(step.g.isZero());
  CHECK((step.i.array() == 0.5).all());
  CHECK((step.f.array() == 0.5).all());
  CHECK((step.o.array() == 0.5).all());
  CHECK(state.c.isZero());
  CHECK(state.h.isZero());

  auto p = LstmParams<double>::zeros(1, 1);
  p.forget.bias << 100.0;
  LstmState<double> prev = LstmState<double>::zeros(1);
  prev.c << 2.0;
  auto [s2, st2] = cell_forward(p, Vec64(Vec64::Zero(1)), prev);
  CHECK(st2.f[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s2.c[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s2.h[0] == doctest::Approx(0.48201379003790845).epsilon(1e-14));

  CHECK_THROWS_AS(cell_forward(zero, Vec64(Vec64::Zero(2)), LstmState<double>::zeros(2)), InvalidInput);
  CHECK_THROWS_AS(cell_forward(zero, Vec64(Vec64::Zero(3)), LstmState<double>::zeros(3)), InvalidInput);
}

TEST_CASE("cell_forward matches scalar loop oracle")
{
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto const p = random_params(4, 5, seed, 1.0);
    Rng rng(seed + 100);
    Vec64 const x = random_vec(rng, 4);
    LstmState<double> prev{random_vec(rng, 5), random_vec(rng, 5)};
    auto const [next, step] = cell_forward(p, x, prev);

    oracle::Cell const cell(p);
    auto h = oracle::to_vector(prev.h);
    auto c = oracle::to_vector(prev.c);
    cell.step(oracle::to_vector(x), h, c);
    for (int k = 0; k < 5; ++k) {
      CHECK(std::abs(next.h[k] - h[k]) <= 1e-12);
      CHECK(std::abs(next.c[k] - c[k]) <= 1e-12);
    }
  }
}

TEST_CASE("gate ranges")
{
  auto const p = random_params(3, 4, 8, 3.0);
  Rng rng(4);
  auto const [state, step] = cell_forward(p, random_vec(rng, 3), LstmState<double>{random_vec(rng, 4), random_vec(rng, 4)});
  CHECK(step.i.minCoeff() > 0.0);
  CHECK(step.i.maxCoeff() < 1.0);
  CHECK(step.f.minCoeff() > 0.0);
  CHECK(step.o.maxCoeff() < 1.0);
  CHECK(step.g.cwiseAbs().maxCoeff() < 1.0);
  CHECK(state.h.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("sequence_forward")
{
  auto const p = random_params(3, 4, 21);
  Rng rng(22);
  std::vector<Vec64> xs{random_vec(rng, 3), random_vec(rng, 3)};
  auto const init = LstmState<double>::zeros(4);

  auto const one = sequence_forward(p, std::vector<Vec64>{xs[0]}, init);
  auto const [s1, st1] = cell_forward(p, xs[0], init);
  REQUIRE(one.states.size() == 1);
  CHECK(one.states[0].h == s1.h);

  auto const two = sequence_forward(p, xs, init);
  auto const [s2, st2] = cell_forward(p, xs[1], s1);
  CHECK(two.states[1].h == s2.h);
  CHECK(two.states[1].c == s2.c);
  CHECK(two.tape.size() == 2);

  auto const zero = LstmParams<double>::zeros(3, 4);
  for (auto const &s : sequence_forward(zero, xs, init).states) CHECK(s.h.isZero());

  CHECK_THROWS_AS(sequence_forward(p, std::vector<Vec64>{}, init), InvalidInput);
}

TEST_CASE("forget bias preserves memory")
{
  auto p = LstmParams<double>::zeros(1, 1);
  p.forget.bias << 50.0;
  p.in.bias << -50.0;
  LstmState<double> init = LstmState<double>::zeros(1);
  init.c << 0.8;
  std::vector<Vec64> xs(50, Vec64::Zero(1));
  auto const seq = sequence_forward(p, xs, init);
  CHECK(std::abs(seq.states.back().c[0] - 0.8) <= 1e-12);
}

TEST_CASE("sequence_backward zero cotangent and mismatch")
{
  auto const p = random_params(3, 4, 31);
  Rng rng(32);
  std::vector<Vec64> xs{random_vec(rng, 3), random_vec(rng, 3), random_vec(rng, 3)};
  auto const seq = sequence_forward(p, xs, LstmState<double>::zeros(4));
  auto const g = sequence_backward(p, seq.tape, std::vector<Vec64>(3, Vec64::Zero(4)));
  g.params.for_each_block([](std::string_view, auto const &b) { CHECK(b.isZero()); });
  for (auto const &dx : g.dx) CHECK(dx.isZero());
  CHECK_THROWS_AS(sequence_backward(p, seq.tape, std::vector<Vec64>(2, Vec64::Zero(4))), InvalidInput);
}

TEST_CASE("sequence_backward single step, zero params")
{
  auto p = LstmParams<double>::zeros(2, 1);
  std::vector<Vec64> xs{Vec64::Zero(2)};
  auto const seq = sequence_forward(p, xs, LstmState<double>::zeros(1));
  auto const g = sequence_backward(p, seq.tape, std::vector<Vec64>{Vec64::Ones(1)});
  // c = 0 here, so the output-gate gradient tanh(c) o' vanishes; the cell input
  // path gives o * i = 0.25.
  double const fd = oracle::central_difference(
    [&](double b) {
      auto q = p;
      q.out.bias << b;
      return weighted_sum(q, xs, {Vec64::Ones(1)});
    },
    0.0, 1e-5);
  CHECK(std::abs(g.params.out.bias[0] - fd) <= 1e-10);
  double const fd_g = oracle::central_difference(
    [&](double b) {
      auto q = p;
      q.cell.bias << b;
      return weighted_sum(q, xs, {Vec64::Ones(1)});
    },
    0.0, 1e-5);
  CHECK(g.params.cell.bias[0] == doctest::Approx(fd_g).epsilon(1e-6));
  CHECK(g.params.cell.bias[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("sequence_backward matches finite differences")
{
  for (auto [de, dh, len] : {std::tuple{3, 4, 5}, std::tuple{6, 3, 8}, std::tuple{16, 16, 2}}) {
    auto const p = random_params(de, dh, 40 + len);
    Rng rng(50 + len);
    std::vector<Vec64> xs, w;
    for (int t = 0; t < len; ++t) {
      xs.push_back(random_vec(rng, de));
      w.push_back(random_vec(rng, dh));
    }
    auto const seq = sequence_forward(p, xs, LstmState<double>::zeros(dh));
    auto const g = sequence_backward(p, seq.tape, w);

    std::vector<double const *> grads;
    g.params.for_each_block([&](std::string_view, auto const &b) { grads.push_back(b.data()); });
    auto probe = p;
    double worst = 0;
    std::size_t k = 0;
    probe.for_each_block([&](std::string_view, auto &b) {
      double const *grad = grads[k++];
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        double &x = b.data()[i];
        double const saved = x;
        double const fd = oracle::central_difference(
          [&](double t) {
            x = t;
            return weighted_sum(probe, xs, w);
          },
          saved, 1e-5);
        x = saved;
        double const rel = std::abs(grad[i] - fd) / std::max(1e-8, std::abs(grad[i]) + std::abs(fd));
        worst = std::max(worst, rel);
      }
    });
    CHECK(worst <= 1e-4);

    for (int t = 0; t < len; ++t) {
      for (int j = 0; j < de; ++j) {
        auto shifted = xs;
        double const fd = oracle::central_difference(
          [&](double v) {
            shifted[t][j] = v;
            return weighted_sum(p, shifted, w);
          },
          xs[t][j], 1e-5);
        CHECK(std::abs(g.dx[t][j] - fd) <= 1e-8 + 1e-4 * std::abs(fd));
      }
    }
  }
}

TEST_CASE("init_params")
{
  auto const a = init_params(5, 7, 13);
  auto const b = init_params(5, 7, 13);
  auto const c = init_params(5, 7, 14);
  bool any_diff = false;
  std::vector<Mat64> blocks_b, blocks_c;
  b.for_each_block([&](std::string_view, auto const &m) { blocks_b.emplace_back(Eigen::Map<Mat64 const>(m.data(), 1, m.size())); });
  c.for_each_block([&](std::string_view, auto const &m) { blocks_c.emplace_back(Eigen::Map<Mat64 const>(m.data(), 1, m.size())); });
  std::size_t k = 0;
  a.for_each_block([&](std::string_view, auto const &m) {
    Mat64 const flat = Eigen::Map<Mat64 const>(m.data(), 1, m.size());
    CHECK(flat == blocks_b[k]);
    if (flat != blocks_c[k]) any_diff = true;
    CHECK(flat.maxCoeff() <= 0.08);
    CHECK(flat.minCoeff() >= -0.08);
    ++k;
  });
  CHECK(k == 12);
  CHECK(any_diff);
  a.validate();
}
