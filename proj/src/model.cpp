#include "lstme/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lstme/error.hpp"
#include "lstme/random.hpp"

namespace lstme {

void Hyperparams::validate() const
{
  require(video_dim >= 1 && embed >= 1 && hidden >= 1 && vocab >= kReservedCount,
          "hyperparams: dimensions must be positive (vocab must hold the reserved tokens)");
  require(lambda >= 0 && lambda <= 1, "hyperparams: lambda must lie in [0, 1]");
  require(mu >= 0, "hyperparams: mu must be non-negative");
  require(lr > 0, "hyperparams: lr must be positive");
  require(!clip || *clip > 0, "hyperparams: clip must be positive when set");
  require(max_len >= 1, "hyperparams: max_len must be positive");
  require(epochs >= 0, "hyperparams: epochs must be non-negative");
  require(batch_size >= 1, "hyperparams: batch_size must be positive");
}

ModelParams ModelParams::zeros(Eigen::Index video_dim, Eigen::Index embed, Eigen::Index hidden,
                               Eigen::Index vocab)
{
  ModelParams p;
  p.emb.video = Mat64::Zero(embed, video_dim);
  p.emb.word = Mat64::Zero(embed, vocab);
  p.lstm = LstmParams<double>::zeros(embed, hidden);
  p.softmax = Mat64::Zero(vocab, hidden);
  return p;
}

void ModelParams::validate() const
{
  emb.validate();
  lstm.validate();
  require(lstm.input_dim() == emb.embed_dim(), "model: LSTM input width " +
                                                 std::to_string(lstm.input_dim()) + " != embedding width " +
                                                 std::to_string(emb.embed_dim()));
  require(softmax.cols() == lstm.hidden_dim(), "model: softmax width != hidden size");
  require(softmax.rows() == emb.vocab_size(), "model: softmax rows != vocabulary size");
}

namespace {

std::vector<Eigen::Map<Vec64>> views(ModelParams &p)
{
  std::vector<Eigen::Map<Vec64>> out;
  p.for_each_block([&](std::string_view, auto &b) { out.emplace_back(b.data(), b.size()); });
  return out;
}

std::vector<Eigen::Map<Vec64 const>> views(ModelParams const &p)
{
  std::vector<Eigen::Map<Vec64 const>> out;
  p.for_each_block([&](std::string_view, auto const &b) { out.emplace_back(b.data(), b.size()); });
  return out;
}

} // namespace

ModelParams ModelParams::zeros_like() const
{
  return zeros(video_dim(), embed_dim(), hidden_dim(), vocab_size());
}

std::int64_t ModelParams::size() const
{
  std::int64_t n = 0;
  for_each_block([&](std::string_view, auto const &b) { n += b.size(); });
  return n;
}

double ModelParams::squared_norm() const
{
  double s = 0;
  for_each_block([&](std::string_view, auto const &b) { s += b.squaredNorm(); });
  return s;
}

bool ModelParams::all_finite() const
{
  bool ok = true;
  for_each_block([&](std::string_view, auto const &b) { ok = ok && b.allFinite(); });
  return ok;
}

ModelParams &ModelParams::add_scaled(ModelParams const &other, double scale)
{
  auto dst = views(*this);
  auto src = views(other);
  require(dst.size() == src.size(), "add_scaled: block count mismatch");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    require(dst[k].size() == src[k].size(), "add_scaled: block shape mismatch");
    dst[k] += scale * src[k];
  }
  return *this;
}

ModelParams &ModelParams::operator*=(double scale)
{
  for_each_block([&](std::string_view, auto &b) { b *= scale; });
  return *this;
}

ModelParams init_model(Hyperparams const &hp)
{
  hp.validate();
  auto p = ModelParams::zeros(hp.video_dim, hp.embed, hp.hidden, hp.vocab);
  Rng rng(hp.seed);
  auto fill = [&](Mat64 &m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-0.08, 0.08);
  };
  fill(p.emb.video);
  fill(p.emb.word);
  fill(p.softmax);
  p.lstm = init_params(hp.embed, hp.hidden, rng.next());
  return p;
}

std::int64_t count_params(Hyperparams const &hp)
{
  std::int64_t const dv = hp.video_dim, de = hp.embed, dh = hp.hidden, v = hp.vocab;
  return 4 * (dh * de + dh * dh + dh) + de * dv + de * v + v * dh;
}

std::vector<TrainingPair> training_pairs(std::vector<CaptionedVideo> const &videos)
{
  std::vector<TrainingPair> out;
  for (auto const &cv : videos)
    for (auto const &c : cv.captions) out.push_back({cv.v, c});
  return out;
}

void check_tokens(TokenSeq const &tokens, Eigen::Index vocab)
{
  require(tokens.size() >= 2, "token sequence shorter than START END");
  require(tokens.front() == kStart, "token sequence does not begin with START");
  require(tokens.back() == kEnd, "token sequence does not end with END");
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    require(tokens[t] >= 0 && tokens[t] < vocab,
            "token " + std::to_string(tokens[t]) + " out of range for vocabulary of " + std::to_string(vocab));
    if (t > 0 && t + 1 < tokens.size())
      require(tokens[t] != kStart && tokens[t] != kEnd, "START/END inside a token sequence");
  }
}

PairForward forward_pair(ModelParams const &p, Vec64 const &video, TokenSeq const &tokens, double lambda)
{
  p.validate();
  check_tokens(tokens, p.vocab_size());
  require(lambda >= 0 && lambda <= 1, "forward_pair: lambda must lie in [0, 1]");

  // Inputs: the embedded video, then the embedding of every token but END.
  std::vector<Vec64> inputs;
  inputs.reserve(tokens.size());
  inputs.push_back(embed_video(p.emb, video));
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) inputs.push_back(p.emb.word.col(tokens[t]));

  auto seq = sequence_forward(p.lstm, inputs, LstmState<double>::zeros(p.hidden_dim()));

  PairForward out;
  out.tape = std::move(seq.tape);
  out.tf = binary_tf(tokens, static_cast<int>(p.vocab_size()));
  // The hidden output after the video step makes no prediction.
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    Vec64 prob = softmax_stable(p.softmax * out.tape[t + 1].h);
    out.loss.nll -= std::log(prob[tokens[t + 1]]);
    out.probs.push_back(std::move(prob));
  }
  out.loss.relevance = relevance_loss(p.emb, video, out.tf);
  out.loss.total = (1 - lambda) * out.loss.relevance + lambda * out.loss.nll;
  return out;
}

ModelParams backward_pair(ModelParams const &p, Vec64 const &video, TokenSeq const &tokens, double lambda,
                          PairForward const &fwd)
{
  require(fwd.tape.size() == tokens.size() && fwd.probs.size() + 1 == tokens.size(),
          "backward_pair: forward record does not match the token sequence");
  ModelParams g = p.zeros_like();

  std::vector<Vec64> dh(fwd.tape.size(), Vec64::Zero(p.hidden_dim()));
  for (std::size_t t = 0; t < fwd.probs.size(); ++t) {
    Vec64 dlogits = fwd.probs[t];
    dlogits[tokens[t + 1]] -= 1.0;
    dlogits *= lambda;
    g.softmax.noalias() += dlogits * fwd.tape[t + 1].h.transpose();
    dh[t + 1].noalias() = p.softmax.transpose() * dlogits;
  }

  auto lg = sequence_backward(p.lstm, fwd.tape, dh);
  g.lstm = std::move(lg.params);
  g.emb.video.noalias() += lg.dx[0] * video.transpose();
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) g.emb.word.col(tokens[t]) += lg.dx[t + 1];

  if (lambda < 1) {
    auto rg = relevance_grad(p.emb, video, fwd.tf);
    g.emb.video += (1 - lambda) * rg.video;
    g.emb.word += (1 - lambda) * rg.word;
  }
  return g;
}

double regularizer(ModelParams const &p)
{
  return p.squared_norm();
}

double objective(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda, double mu)
{
  require(!pairs.empty(), "objective: empty dataset");
  double sum = 0;
  for (auto const &pr : pairs) sum += forward_pair(p, pr.video, pr.tokens, lambda).loss.total;
  return sum / static_cast<double>(pairs.size()) + mu * regularizer(p);
}

ModelParams objective_grad(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda,
                           double mu)
{
  require(!pairs.empty(), "objective_grad: empty dataset");
  ModelParams g = p.zeros_like();
  for (auto const &pr : pairs) {
    auto fwd = forward_pair(p, pr.video, pr.tokens, lambda);
    g.add_scaled(backward_pair(p, pr.video, pr.tokens, lambda, fwd), 1.0);
  }
  g *= 1.0 / static_cast<double>(pairs.size());
  g.add_scaled(p, 2 * mu);
  return g;
}

double sgd_step(ModelParams &p, ModelParams const &grads, double lr, std::optional<double> clip)
{
  if (!grads.all_finite()) throw NumericError("sgd_step: non-finite gradient");
  double const norm = std::sqrt(grads.squared_norm());
  double scale = lr;
  if (clip && norm > *clip) scale *= *clip / norm;
  p.add_scaled(grads, -scale);
  return norm;
}

TrainResult train(ModelParams p0, std::vector<TrainingPair> const &pairs, Hyperparams const &hp,
                  EpochCallback const &on_epoch)
{
  hp.validate();
  require(!pairs.empty(), "train: empty dataset");
  p0.validate();
  for (auto const &pr : pairs) {
    require(pr.video.size() == p0.video_dim(), "train: feature length " + std::to_string(pr.video.size()) +
                                                 " != model video dim " + std::to_string(p0.video_dim()));
    check_tokens(pr.tokens, p0.vocab_size());
  }

  TrainResult result{std::move(p0), {}};
  auto &p = result.params;
  Rng rng(hp.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  auto const batch = static_cast<std::size_t>(hp.batch_size);

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    rng.shuffle(order);
    double sum_total = 0, sum_nll = 0, sum_rel = 0;
    int step = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
      auto const stop = std::min(order.size(), start + batch);
      ModelParams g = p.zeros_like();
      for (std::size_t k = start; k < stop; ++k) {
        auto const &pr = pairs[order[k]];
        auto fwd = forward_pair(p, pr.video, pr.tokens, hp.lambda);
        if (!std::isfinite(fwd.loss.total))
          throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step));
        sum_total += fwd.loss.total;
        sum_nll += fwd.loss.nll;
        sum_rel += fwd.loss.relevance;
        g.add_scaled(backward_pair(p, pr.video, pr.tokens, hp.lambda, fwd), 1.0);
      }
      g *= 1.0 / static_cast<double>(stop - start);
      g.add_scaled(p, 2 * hp.mu);
      try {
        sgd_step(p, g, hp.lr, hp.clip);
      } catch (NumericError const &) {
        throw NumericError("training diverged: non-finite gradient at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step));
      }
    }
    auto const n = static_cast<double>(pairs.size());
    EpochStats stats{epoch, sum_total / n + hp.mu * regularizer(p), sum_nll / n, sum_rel / n};
    if (!std::isfinite(stats.objective))
      throw NumericError("training diverged: non-finite objective at epoch " + std::to_string(epoch));
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

Decoded greedy_decode(ModelParams const &p, Vec64 const &video, int max_len)
{
  p.validate();
  require(max_len >= 1, "greedy_decode: max_len must be positive");
  auto state = LstmState<double>::zeros(p.hidden_dim());
  state = cell_forward(p.lstm, embed_video(p.emb, video), state).first;
  Vec64 x = p.emb.word.col(kStart);

  Decoded out;
  for (int n = 0; n < max_len; ++n) {
    state = cell_forward(p.lstm, x, state).first;
    Vec64 const logits = p.softmax * state.h;
    int best = 0;
    for (int w = 1; w < logits.size(); ++w)
      if (logits[w] > logits[best]) best = w;
    out.tokens.push_back(best);
    out.probs.push_back(softmax_stable(logits));
    if (best == kEnd) return out;
    x = p.emb.word.col(best);
  }
  out.truncated = true;
  return out;
}

} // namespace lstme
