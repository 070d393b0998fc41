#include <cmath>

#include "doctest.h"
#include "lstme/error.hpp"
#include "lstme/numkit.hpp"
#include "lstme/random.hpp"
#include "oracles.hpp"

using namespace lstme;

TEST_CASE("matvec")
{
  Vec64 x(2);
  x << 3, 4;
  CHECK(matvec(Mat64::Identity(2, 2), x) == x);
  CHECK(matvec(Mat64::Zero(2, 2), x).isZero());

  Mat64 m(2, 2);
  m << 1, 2, 3, 4;
  Vec64 ones = Vec64::Ones(2);
  auto const y = matvec(m, ones);
  CHECK(y[0] == 3.0);
  CHECK(y[1] == 7.0);

  CHECK_THROWS_AS(matvec(Mat64::Zero(2, 3), x), InvalidInput);
}

TEST_CASE("matvec is linear")
{
  Rng rng(3);
  Mat64 m(4, 5);
  Vec64 a(5), b(5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < 5; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  Vec64 const lhs = matvec(m, Vec64(2.5 * a + b));
  Vec64 const rhs = 2.5 * matvec(m, a) + matvec(m, b);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("activations")
{
  Vec64 zero = Vec64::Zero(1);
  CHECK(activation(zero, Activation::Sigmoid)[0] == 0.5);
  CHECK(activation(zero, Activation::Tanh)[0] == 0.0);
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));

  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    double const x = rng.uniform(-50, 50);
    CHECK(sigmoid(x) + sigmoid(-x) == doctest::Approx(1.0).epsilon(1e-15));
    Vec64 v(1);
    v << x;
    Vec64 neg = -v;
    CHECK(activation(v, Activation::Tanh)[0] == -activation(neg, Activation::Tanh)[0]);
  }
}

TEST_CASE("activation_grad from outputs")
{
  Vec64 y(1);
  y << 0.5;
  CHECK(activation_grad(y, Activation::Sigmoid)[0] == 0.25);
  y << 0.0;
  CHECK(activation_grad(y, Activation::Tanh)[0] == 1.0);

  y << 0.7310585786;
  // Central difference of sigmoid at x=1.
  CHECK(activation_grad(y, Activation::Sigmoid)[0] == doctest::Approx(0.1966119332341698).epsilon(1e-9));

  Rng rng(5);
  for (auto kind : {Activation::Sigmoid, Activation::Tanh}) {
    for (int k = 0; k < 50; ++k) {
      double const x = rng.uniform(-4, 4);
      Vec64 in(1);
      in << x;
      auto const out = activation(in, kind);
      auto f = [&](double t) {
        Vec64 z(1);
        z << t;
        return activation(z, kind)[0];
      };
      double const fd = oracle::central_difference(f, x, 1e-5);
      CHECK(std::abs(activation_grad(out, kind)[0] - fd) <= 1e-6);
    }
  }
}

TEST_CASE("softmax_stable")
{
  Vec64 z = Vec64::Zero(2);
  auto const half = softmax_stable(z);
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);

  Vec64 z3(3);
  z3 << 1, 2, 3;
  auto const p = softmax_stable(z3);
  CHECK(p[0] == doctest::Approx(0.09003057317038046).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.24472847105479767).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.6652409557748219).epsilon(1e-14));

  Vec64 shifted = z3.array() + 1000.0;
  CHECK((softmax_stable(shifted) - p).cwiseAbs().maxCoeff() <= 1e-15);

  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    Vec64 r(7);
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.uniform(-50, 50);
    auto const q = softmax_stable(r);
    CHECK(std::abs(q.sum() - 1.0) <= 1e-12);
    CHECK(q.minCoeff() >= 0.0);
  }
}

TEST_CASE("all_finite")
{
  Vec64 v = Vec64::Ones(3);
  CHECK(all_finite(v));
  v[1] = std::nan("");
  CHECK_FALSE(all_finite(v));
  v[1] = INFINITY;
  CHECK_FALSE(all_finite(v));
}
