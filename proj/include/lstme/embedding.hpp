#pragma once

#include "lstme/numkit.hpp"

namespace lstme {

// Linear maps from video features and from vocabulary space into the shared
// embedding. `word` also embeds the per-step one-hot inputs of the decoder.
template <typename Scalar>
struct EmbeddingParams
{
  Mat<Scalar> video; // embed x video_dim
  Mat<Scalar> word;  // embed x vocab

  Eigen::Index embed_dim() const { return video.rows(); }
  Eigen::Index video_dim() const { return video.cols(); }
  Eigen::Index vocab_size() const { return word.cols(); }

  void validate() const
  {
    require(video.rows() == word.rows(), "embedding: video map has " + std::to_string(video.rows()) +
                                           " rows, word map has " + std::to_string(word.rows()));
  }
};

template <typename Scalar>
Vec<Scalar> embed_video(EmbeddingParams<Scalar> const &e, Vec<Scalar> const &v)
{
  require(v.size() == e.video_dim(), "embed_video: feature length " + std::to_string(v.size()) +
                                       ", expected " + std::to_string(e.video_dim()));
  return matvec(e.video, v);
}

// For a binary term-frequency vector this is the sum of the embedding columns
// of the words present.
template <typename Scalar>
Vec<Scalar> embed_sentence(EmbeddingParams<Scalar> const &e, Vec<Scalar> const &s)
{
  require(s.size() == e.vocab_size(), "embed_sentence: sentence vector length " +
                                        std::to_string(s.size()) + ", expected " +
                                        std::to_string(e.vocab_size()));
  return matvec(e.word, s);
}

template <typename Scalar>
Scalar relevance_loss(EmbeddingParams<Scalar> const &e, Vec<Scalar> const &v, Vec<Scalar> const &s)
{
  e.validate();
  return (embed_video(e, v) - embed_sentence(e, s)).squaredNorm();
}

template <typename Scalar>
struct RelevanceGradient
{
  Mat<Scalar> video;
  Mat<Scalar> word;
};

template <typename Scalar>
RelevanceGradient<Scalar> relevance_grad(EmbeddingParams<Scalar> const &e, Vec<Scalar> const &v,
                                         Vec<Scalar> const &s)
{
  e.validate();
  Vec<Scalar> const d = embed_video(e, v) - embed_sentence(e, s);
  return {Scalar(2) * d * v.transpose(), Scalar(-2) * d * s.transpose()};
}

} // namespace lstme
