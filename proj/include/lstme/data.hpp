#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lstme/config.hpp"
#include "lstme/numkit.hpp"
#include "lstme/random.hpp"

namespace lstme {

using TokenSeq = std::vector<int>;

inline constexpr int kStart = 0;
inline constexpr int kEnd = 1;
inline constexpr int kUnk = 2;
inline constexpr int kReservedCount = 3;

class Vocabulary
{
public:
  // Reserved tokens only.
  Vocabulary();

  // Words in index order; the first three must be the reserved tokens.
  static Vocabulary from_words(std::vector<std::string> words);

  int size() const { return static_cast<int>(words_.size()); }
  std::optional<int> find(std::string_view word) const;
  int index(std::string_view word) const { return find(word).value_or(kUnk); }
  std::string const &word(int index) const;
  std::vector<std::string> const &words() const { return words_; }

  static std::string_view start_word() { return "<s>"; }
  static std::string_view end_word() { return "</s>"; }
  static std::string_view unk_word() { return "<unk>"; }

private:
  void add(std::string word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Lowercase, strip punctuation (apostrophes and hyphens inside words are
// kept), split on whitespace.
std::vector<std::string> tokenize(std::string_view sentence);

// Reserved tokens first, then words by descending frequency, ties broken
// lexicographically. Words seen fewer than `min_count` times are left out.
Vocabulary build_vocab(std::vector<std::string> const &sentences, int min_count);

struct EncodedSentence
{
  TokenSeq tokens; // START, words..., END
  Vec64 tf;        // binary presence over the vocabulary, reserved START/END excluded
};

EncodedSentence encode_sentence(Vocabulary const &vocab, std::string_view sentence);

// Binary term-frequency vector of a START...END token sequence. UNK counts as
// a word; START and END never do.
Vec64 binary_tf(TokenSeq const &tokens, int vocab_size);

// Words of a token sequence with START and END dropped.
std::vector<std::string> decode_tokens(Vocabulary const &vocab, TokenSeq const &tokens);

void write_vocab(std::ostream &out, Vocabulary const &vocab);
Vocabulary read_vocab(std::istream &in);

// --- corpora -----------------------------------------------------------------

// Mean-pooled video features keyed by id, in first-appearance order.
struct FeatureTable
{
  std::vector<std::string> ids;
  std::unordered_map<std::string, Vec64> vectors;
  Eigen::Index dim = 0;

  Vec64 const &at(std::string const &id) const { return vectors.at(id); }
};

// Rows `<id>\t<f1>,<f2>,...`; `#` comment lines and blank lines skipped.
// Rows sharing an id are averaged elementwise.
FeatureTable parse_features(std::istream &in, std::string const &source);
FeatureTable ingest_features(std::filesystem::path const &path);

// `<id>\t<sentence>` per line, file order kept; repeated ids give several
// sentences.
std::vector<std::pair<std::string, std::string>> parse_tsv(std::istream &in,
                                                           std::string const &source);
std::vector<std::pair<std::string, std::string>> read_tsv(std::filesystem::path const &path);

// A video with its raw reference sentences.
struct VideoRecord
{
  std::string id;
  Vec64 feature;
  std::vector<std::string> sentences;
};

// A video with captions encoded against a vocabulary.
struct CaptionedVideo
{
  std::string id;
  Vec64 v;
  std::vector<TokenSeq> captions;
  std::vector<std::string> sentences;
};

// Joins features and captions by id. Videos without captions are dropped;
// captions whose id has no features are rejected.
std::vector<VideoRecord> join_corpus(FeatureTable const &features,
                                     std::vector<std::pair<std::string, std::string>> const &captions);

std::vector<CaptionedVideo> encode_corpus(std::vector<VideoRecord> const &records,
                                          Vocabulary const &vocab);

std::vector<std::string> all_sentences(std::vector<VideoRecord> const &records);

void write_features(std::ostream &out, std::vector<VideoRecord> const &records);
void write_captions(std::ostream &out, std::vector<VideoRecord> const &records);

// --- synthetic SVO corpus ----------------------------------------------------

struct SyntheticSpec
{
  std::vector<std::string> subjects;
  std::vector<std::string> verbs;
  std::vector<std::string> objects;
  int dim = 32;
  double noise_sigma = 0.1;
  int count = 100;
  std::uint64_t seed = 1;

  void validate() const;
  static SyntheticSpec from_config(Config const &cfg);
};

// Present participle under a small English rule set: drop a silent final
// `e`, double a final consonant after a single short vowel, then add `ing`.
std::string ing_form(std::string const &verb);

std::string svo_sentence(std::string const &subject, std::string const &verb,
                         std::string const &object);

// Each video's feature is the sum of fixed per-word unit vectors for its
// subject, verb and object plus N(0, sigma^2) noise per coordinate; its caption
// is "<subject> is <verb>ing a <object>".
std::vector<VideoRecord> synth_generate(SyntheticSpec const &spec);

// --- splits ------------------------------------------------------------------

template <typename T>
struct Split
{
  std::vector<T> train, validation, test;
};

// Seeded shuffle followed by a contiguous partition. When the fractions sum to
// one the test part takes the remainder.
template <typename T>
Split<T> split(std::vector<T> items, std::array<double, 3> fractions, std::uint64_t seed)
{
  require(items.size() >= 3, "split: need at least 3 items, got " + std::to_string(items.size()));
  double sum = 0;
  for (double f : fractions) {
    require(f > 0, "split: fractions must be positive");
    sum += f;
  }
  require(sum <= 1 + 1e-9, "split: fractions sum to more than 1");

  Rng rng(seed);
  rng.shuffle(items);
  auto const n = static_cast<double>(items.size());
  auto count = [&](double f) { return static_cast<std::size_t>(std::floor(n * f + 1e-9)); };
  std::size_t const n_train = count(fractions[0]);
  std::size_t const n_val = count(fractions[1]);
  std::size_t const n_test = std::abs(sum - 1) < 1e-9 ? items.size() - n_train - n_val : count(fractions[2]);

  Split<T> out;
  auto it = std::make_move_iterator(items.begin());
  out.train.assign(it, it + n_train);
  out.validation.assign(it + n_train, it + n_train + n_val);
  out.test.assign(it + n_train + n_val, it + n_train + n_val + n_test);
  return out;
}

} // namespace lstme
