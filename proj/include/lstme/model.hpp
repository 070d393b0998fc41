#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "lstme/data.hpp"
#include "lstme/embedding.hpp"
#include "lstme/lstm.hpp"
#include "lstme/numkit.hpp"

namespace lstme {

struct Hyperparams
{
  int video_dim = 0;
  int embed = 64;
  int hidden = 64;
  int vocab = 0;
  double lambda = 0.7; // weight of the sentence likelihood; 1 - lambda weights relevance
  double mu = 1e-4;    // L2 regularisation weight
  double lr = 0.05;
  std::optional<double> clip = 5.0; // global gradient-norm cap
  int max_len = 20;
  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 1;

  void validate() const;
};

// Every trainable block of the joint model.
struct ModelParams
{
  EmbeddingParams<double> emb;
  LstmParams<double> lstm;
  Mat64 softmax; // vocab x hidden

  static ModelParams zeros(Eigen::Index video_dim, Eigen::Index embed, Eigen::Index hidden,
                           Eigen::Index vocab);

  Eigen::Index video_dim() const { return emb.video_dim(); }
  Eigen::Index embed_dim() const { return emb.embed_dim(); }
  Eigen::Index hidden_dim() const { return lstm.hidden_dim(); }
  Eigen::Index vocab_size() const { return softmax.rows(); }

  void validate() const;

  // Blocks in checkpoint order: Tv, Ts, the twelve LSTM blocks, Th.
  template <typename F>
  void for_each_block(F &&f)
  {
    f(std::string_view("Tv"), emb.video);
    f(std::string_view("Ts"), emb.word);
    lstm.for_each_block(f);
    f(std::string_view("Th"), softmax);
  }

  template <typename F>
  void for_each_block(F &&f) const
  {
    f(std::string_view("Tv"), emb.video);
    f(std::string_view("Ts"), emb.word);
    lstm.for_each_block(f);
    f(std::string_view("Th"), softmax);
  }

  ModelParams zeros_like() const;
  std::int64_t size() const;
  double squared_norm() const;
  bool all_finite() const;

  // this += scale * other
  ModelParams &add_scaled(ModelParams const &other, double scale);
  ModelParams &operator*=(double scale);
};

// Uniform [-0.08, 0.08] initialisation of every block.
ModelParams init_model(Hyperparams const &hp);

std::int64_t count_params(Hyperparams const &hp);

struct PairLossBreakdown
{
  double relevance = 0;
  double nll = 0;
  double total = 0;
};

// Everything a backward pass needs from the matching forward pass.
struct PairForward
{
  PairLossBreakdown loss;
  LstmTape<double> tape;     // video step first, then one step per input word
  std::vector<Vec64> probs;  // probs[t] predicts tokens[t + 1]
  Vec64 tf;
};

struct TrainingPair
{
  Vec64 video;
  TokenSeq tokens;
};

std::vector<TrainingPair> training_pairs(std::vector<CaptionedVideo> const &videos);

// Token sequences must be START, words..., END with every index in range.
void check_tokens(TokenSeq const &tokens, Eigen::Index vocab);

PairForward forward_pair(ModelParams const &p, Vec64 const &video, TokenSeq const &tokens, double lambda);

ModelParams backward_pair(ModelParams const &p, Vec64 const &video, TokenSeq const &tokens, double lambda,
                          PairForward const &fwd);

// Sum of squared Frobenius norms of every block.
double regularizer(ModelParams const &p);

// Mean pair loss plus mu times the regulariser.
double objective(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda, double mu);

// Gradient of `objective`.
ModelParams objective_grad(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda,
                           double mu);

// In-place SGD update with optional global-norm clipping. Returns the gradient
// norm before clipping. Throws NumericError on non-finite gradients.
double sgd_step(ModelParams &p, ModelParams const &grads, double lr, std::optional<double> clip);

struct EpochStats
{
  int epoch = 0;
  double objective = 0; // mean pair loss over the epoch plus the end-of-epoch regulariser
  double nll = 0;
  double relevance = 0;
};

struct TrainResult
{
  ModelParams params;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(EpochStats const &)>;

// Mini-batch SGD on the regularised objective. Pairs are reshuffled every
// epoch from a generator seeded with hp.seed.
TrainResult train(ModelParams p0, std::vector<TrainingPair> const &pairs, Hyperparams const &hp,
                  EpochCallback const &on_epoch = {});

struct Decoded
{
  TokenSeq tokens;          // START excluded, END included when emitted
  std::vector<Vec64> probs; // distribution behind each emitted token
  bool truncated = false;
};

// Greedy (argmax, lowest index on ties) decoding. At most `max_len` tokens are
// emitted, END included.
Decoded greedy_decode(ModelParams const &p, Vec64 const &video, int max_len);

} // namespace lstme
