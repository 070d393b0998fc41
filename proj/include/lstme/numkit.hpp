#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "lstme/error.hpp"

namespace lstme {

// Dense column vector and row-major matrix. Row-major is the storage order
// used by the checkpoint format, so blocks can be streamed without transposes.
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec64 = Vec<double>;
using Mat64 = Mat<double>;

enum class Activation
{
  Sigmoid,
  Tanh
};

inline std::string dims(Eigen::Index rows, Eigen::Index cols)
{
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename MD, typename XD>
Vec<typename MD::Scalar> matvec(Eigen::MatrixBase<MD> const &m, Eigen::MatrixBase<XD> const &x)
{
  require(x.cols() == 1, "matvec: right operand must be a column vector");
  require(m.cols() == x.rows(),
          "matvec: " + dims(m.rows(), m.cols()) + " matrix applied to length-" +
            std::to_string(x.rows()) + " vector");
  return m * x;
}

template <typename Scalar>
Scalar sigmoid(Scalar x)
{
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename XD>
Vec<typename XD::Scalar> activation(Eigen::MatrixBase<XD> const &x, Activation kind)
{
  using S = typename XD::Scalar;
  if (kind == Activation::Sigmoid) return x.unaryExpr([](S v) { return sigmoid(v); });
  return x.unaryExpr([](S v) { return std::tanh(v); });
}

// Derivative expressed through the forward output y.
template <typename YD>
Vec<typename YD::Scalar> activation_grad(Eigen::MatrixBase<YD> const &y, Activation kind)
{
  using S = typename YD::Scalar;
  if (kind == Activation::Sigmoid) return y.unaryExpr([](S v) { return v * (S(1) - v); });
  return y.unaryExpr([](S v) { return S(1) - v * v; });
}

template <typename ZD>
Vec<typename ZD::Scalar> softmax_stable(Eigen::MatrixBase<ZD> const &z)
{
  using S = typename ZD::Scalar;
  require(z.size() > 0, "softmax_stable: empty input");
  Vec<S> e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <typename D>
bool all_finite(Eigen::MatrixBase<D> const &x)
{
  return x.allFinite();
}

} // namespace lstme
