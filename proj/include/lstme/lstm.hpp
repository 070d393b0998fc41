#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "lstme/numkit.hpp"
#include "lstme/random.hpp"

namespace lstme {

// Weights feeding one gate (or the cell input): input projection, recurrent
// projection and bias.
template <typename Scalar>
struct GateParams
{
  Mat<Scalar> input;     // hidden x embed
  Mat<Scalar> recurrent; // hidden x hidden
  Vec<Scalar> bias;      // hidden
};

// Peephole-free LSTM layer.
template <typename Scalar>
struct LstmParams
{
  GateParams<Scalar> cell;
  GateParams<Scalar> in;
  GateParams<Scalar> forget;
  GateParams<Scalar> out;

  static LstmParams zeros(Eigen::Index embed, Eigen::Index hidden)
  {
    LstmParams p;
    for (auto *g : {&p.cell, &p.in, &p.forget, &p.out}) {
      g->input = Mat<Scalar>::Zero(hidden, embed);
      g->recurrent = Mat<Scalar>::Zero(hidden, hidden);
      g->bias = Vec<Scalar>::Zero(hidden);
    }
    return p;
  }

  Eigen::Index input_dim() const { return cell.input.cols(); }
  Eigen::Index hidden_dim() const { return cell.input.rows(); }

  void validate() const
  {
    auto const de = input_dim();
    auto const dh = hidden_dim();
    require(de >= 1 && dh >= 1, "lstm: empty parameter block");
    for (auto const *g : {&cell, &in, &forget, &out}) {
      require(g->input.rows() == dh && g->input.cols() == de, "lstm: inconsistent input weights");
      require(g->recurrent.rows() == dh && g->recurrent.cols() == dh,
              "lstm: inconsistent recurrent weights");
      require(g->bias.size() == dh, "lstm: inconsistent bias");
    }
  }

  // Visits every block in checkpoint order: input weights (g, i, f, o), then
  // recurrent weights, then biases. `f(name, block)`.
  template <typename F>
  void for_each_block(F &&f)
  {
    visit(*this, f);
  }

  template <typename F>
  void for_each_block(F &&f) const
  {
    visit(*this, f);
  }

private:
  template <typename Self, typename F>
  static void visit(Self &p, F &f)
  {
    f(std::string_view("Tg"), p.cell.input);
    f(std::string_view("Ti"), p.in.input);
    f(std::string_view("Tf"), p.forget.input);
    f(std::string_view("To"), p.out.input);
    f(std::string_view("Rg"), p.cell.recurrent);
    f(std::string_view("Ri"), p.in.recurrent);
    f(std::string_view("Rf"), p.forget.recurrent);
    f(std::string_view("Ro"), p.out.recurrent);
    f(std::string_view("bg"), p.cell.bias);
    f(std::string_view("bi"), p.in.bias);
    f(std::string_view("bf"), p.forget.bias);
    f(std::string_view("bo"), p.out.bias);
  }
};

template <typename Scalar>
struct LstmState
{
  Vec<Scalar> h;
  Vec<Scalar> c;

  static LstmState zeros(Eigen::Index hidden)
  {
    return {Vec<Scalar>::Zero(hidden), Vec<Scalar>::Zero(hidden)};
  }
};

// Activations cached by one forward step for the backward pass.
template <typename Scalar>
struct LstmStep
{
  Vec<Scalar> x;
  Vec<Scalar> g, i, f, o;
  Vec<Scalar> c, h;
  Vec<Scalar> c_prev, h_prev;
};

template <typename Scalar>
using LstmTape = std::vector<LstmStep<Scalar>>;

template <typename Scalar>
std::pair<LstmState<Scalar>, LstmStep<Scalar>>
cell_forward(LstmParams<Scalar> const &p, Vec<Scalar> const &x, LstmState<Scalar> const &prev)
{
  auto const dh = p.hidden_dim();
  require(x.size() == p.input_dim(), "cell_forward: input length " + std::to_string(x.size()) +
                                       ", expected " + std::to_string(p.input_dim()));
  require(prev.h.size() == dh && prev.c.size() == dh, "cell_forward: state length mismatch");

  auto pre = [&](GateParams<Scalar> const &gp) -> Vec<Scalar> {
    return gp.input * x + gp.recurrent * prev.h + gp.bias;
  };

  LstmStep<Scalar> s;
  s.x = x;
  s.h_prev = prev.h;
  s.c_prev = prev.c;
  s.g = activation(pre(p.cell), Activation::Tanh);
  s.i = activation(pre(p.in), Activation::Sigmoid);
  s.f = activation(pre(p.forget), Activation::Sigmoid);
  s.c = s.g.cwiseProduct(s.i) + prev.c.cwiseProduct(s.f);
  s.o = activation(pre(p.out), Activation::Sigmoid);
  s.h = activation(s.c, Activation::Tanh).cwiseProduct(s.o);
  LstmState<Scalar> next{s.h, s.c};
  return {std::move(next), std::move(s)};
}

template <typename Scalar>
struct LstmSequence
{
  std::vector<LstmState<Scalar>> states;
  LstmTape<Scalar> tape;
};

template <typename Scalar>
LstmSequence<Scalar> sequence_forward(LstmParams<Scalar> const &p,
                                      std::vector<Vec<Scalar>> const &inputs,
                                      LstmState<Scalar> const &init)
{
  require(!inputs.empty(), "sequence_forward: empty input sequence");
  LstmSequence<Scalar> out;
  out.states.reserve(inputs.size());
  out.tape.reserve(inputs.size());
  LstmState<Scalar> state = init;
  for (auto const &x : inputs) {
    auto [next, step] = cell_forward(p, x, state);
    state = next;
    out.states.push_back(std::move(next));
    out.tape.push_back(std::move(step));
  }
  return out;
}

template <typename Scalar>
struct LstmGradients
{
  LstmParams<Scalar> params;
  std::vector<Vec<Scalar>> dx;
  LstmState<Scalar> dinit;
};

// Gradients of L = sum_t <dh[t], h[t]> with respect to every parameter, every
// input and the initial state. Full backpropagation through time.
template <typename Scalar>
LstmGradients<Scalar> sequence_backward(LstmParams<Scalar> const &p,
                                        LstmTape<Scalar> const &tape,
                                        std::vector<Vec<Scalar>> const &dh)
{
  require(dh.size() == tape.size(), "sequence_backward: " + std::to_string(dh.size()) +
                                      " cotangents for a tape of " + std::to_string(tape.size()));
  require(!tape.empty(), "sequence_backward: empty tape");
  auto const hidden = p.hidden_dim();

  LstmGradients<Scalar> out;
  out.params = LstmParams<Scalar>::zeros(p.input_dim(), hidden);
  out.dx.resize(tape.size());
  Vec<Scalar> dh_next = Vec<Scalar>::Zero(hidden);
  Vec<Scalar> dc_next = Vec<Scalar>::Zero(hidden);

  for (std::size_t k = tape.size(); k-- > 0;) {
    auto const &s = tape[k];
    require(dh[k].size() == hidden, "sequence_backward: cotangent length mismatch");
    Vec<Scalar> const dhk = dh[k] + dh_next;
    Vec<Scalar> const tc = activation(s.c, Activation::Tanh);

    Vec<Scalar> const d_o = dhk.cwiseProduct(tc);
    Vec<Scalar> const dc =
      dc_next + dhk.cwiseProduct(s.o).cwiseProduct(activation_grad(tc, Activation::Tanh));

    Vec<Scalar> const dz_g = dc.cwiseProduct(s.i).cwiseProduct(activation_grad(s.g, Activation::Tanh));
    Vec<Scalar> const dz_i = dc.cwiseProduct(s.g).cwiseProduct(activation_grad(s.i, Activation::Sigmoid));
    Vec<Scalar> const dz_f =
      dc.cwiseProduct(s.c_prev).cwiseProduct(activation_grad(s.f, Activation::Sigmoid));
    Vec<Scalar> const dz_o = d_o.cwiseProduct(activation_grad(s.o, Activation::Sigmoid));

    Vec<Scalar> dx = Vec<Scalar>::Zero(p.input_dim());
    dh_next.setZero();
    auto accumulate = [&](GateParams<Scalar> &grad, GateParams<Scalar> const &gp, Vec<Scalar> const &dz) {
      grad.input.noalias() += dz * s.x.transpose();
      grad.recurrent.noalias() += dz * s.h_prev.transpose();
      grad.bias += dz;
      dx.noalias() += gp.input.transpose() * dz;
      dh_next.noalias() += gp.recurrent.transpose() * dz;
    };
    accumulate(out.params.cell, p.cell, dz_g);
    accumulate(out.params.in, p.in, dz_i);
    accumulate(out.params.forget, p.forget, dz_f);
    accumulate(out.params.out, p.out, dz_o);

    dc_next = dc.cwiseProduct(s.f);
    out.dx[k] = std::move(dx);
  }
  out.dinit = {dh_next, dc_next};
  return out;
}

// Entries i.i.d. uniform on [-0.08, 0.08], filled block by block in checkpoint
// order, row-major within a block.
template <typename Scalar = double>
LstmParams<Scalar> init_params(Eigen::Index embed, Eigen::Index hidden, std::uint64_t seed)
{
  require(embed >= 1 && hidden >= 1, "init_params: dimensions must be positive");
  auto p = LstmParams<Scalar>::zeros(embed, hidden);
  Rng rng(seed);
  p.for_each_block([&](std::string_view, auto &block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c)
        block(r, c) = static_cast<Scalar>(rng.uniform(-0.08, 0.08));
  });
  return p;
}

} // namespace lstme
