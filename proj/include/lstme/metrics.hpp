#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace lstme {

using Words = std::vector<std::string>;

// One scored item: a hypothesis and its references, reserved tokens removed.
struct EvalPair
{
  Words hypothesis;
  std::vector<Words> references;
};

// Tokenises both sides with the corpus tokenizer and drops reserved tokens.
EvalPair make_eval_pair(std::string const &hypothesis, std::vector<std::string> const &references);

struct BleuResult
{
  std::vector<double> score;     // score[n-1] is BLEU@n
  std::vector<long> matched;     // clipped n-gram matches, summed over the corpus
  std::vector<long> total;       // hypothesis n-grams, summed over the corpus
  long hyp_length = 0;
  long ref_length = 0;           // sum of closest reference lengths
  double brevity_penalty = 0;

  double precision(int n) const;
};

// Corpus BLEU with per-reference clipping, uniform weights, no smoothing.
BleuResult bleu_corpus(std::vector<EvalPair> const &pairs, int max_n = 4);

// Suffix stemmer for the second matching stage.
std::string meteor_stem(std::string const &word);

struct MeteorAlignment
{
  int matches = 0;
  int chunks = 0;
  double precision = 0;
  double recall = 0;
  double fmean = 0;
  double penalty = 0;
  double score = 0;
};

// Exact then stemmed unigram matching, Fmean = 10PR/(R+9P), fragmentation
// penalty 0.5 (chunks/matches)^3. No synonym stage.
MeteorAlignment meteor_align(Words const &hypothesis, Words const &reference);

// Mean over pairs of the best-reference score.
double meteor_lite(std::vector<EvalPair> const &pairs);

struct SvoTriple
{
  std::string subject, verb, object;
};

// "<subject> is <verb>ing a <object>"; the verb comes back with `ing` removed.
std::optional<SvoTriple> extract_svo(Words const &words);

struct SvoResult
{
  double subject = 0; // percentages
  double verb = 0;
  double object = 0;
  int items = 0;
  int nonconforming = 0; // hypotheses that do not follow the template
};

SvoResult svo_accuracy(std::vector<EvalPair> const &pairs);

// (m - min) / min elementwise; every value must be positive.
std::vector<double> normalize_curve(std::vector<double> const &values);

struct MetricReport
{
  std::array<double, 4> bleu{};
  double meteor = 0;
  std::optional<SvoResult> svo;
};

MetricReport evaluate(std::vector<EvalPair> const &pairs, bool with_svo);

// `key = value` lines, percentages with one decimal.
std::string format_report(MetricReport const &report);
std::string format_percent(double fraction);

} // namespace lstme
