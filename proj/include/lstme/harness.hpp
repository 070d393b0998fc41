#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lstme/checkpoint.hpp"
#include "lstme/config.hpp"
#include "lstme/data.hpp"
#include "lstme/metrics.hpp"
#include "lstme/model.hpp"

namespace lstme {

enum ExitCode : int
{
  kExitOk = 0,
  kExitUsage = 1,
  kExitNumeric = 2,
};

// Command-line flags shared by the subcommands. Set flags override values from
// the config file, which override built-in defaults.
struct Overrides
{
  std::optional<std::string> config;
  std::optional<long long> seed;
  std::optional<double> lambda;
  std::optional<double> mu;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<int> hidden;
  std::optional<int> embed;
  std::optional<int> max_len;
  std::optional<std::string> out;
};

struct RunSettings
{
  Config config;
  Hyperparams hp; // video_dim and vocab are filled once data is loaded
  int min_count = 1;
  std::array<double, 3> split{0.7, 0.15, 0.15};
  std::string out = "model.ckpt";
};

RunSettings resolve_settings(Overrides const &flags);

// Parses the hyperparameter keys of a config (seed, lambda, mu, lr, clip,
// epochs, batch_size, hidden, embed, max_len).
Hyperparams hyperparams_from(Config const &cfg, Hyperparams base = {});

struct Corpus
{
  std::vector<VideoRecord> records;
  bool synthetic = false;
};

// `synthetic = <spec path>`, inline synthetic keys (`subjects`, ...), or
// `features` plus `captions` paths.
Corpus load_corpus(Config const &cfg);

struct TrainedModel
{
  Checkpoint checkpoint;
  Vocabulary vocab;
  std::vector<EpochStats> trace;
};

// Builds the vocabulary from the records' sentences, initialises from hp.seed
// and trains.
TrainedModel train_on(std::vector<VideoRecord> const &records, Hyperparams hp, int min_count,
                      EpochCallback const &on_epoch = {});

struct Hypothesis
{
  std::string id;
  std::string sentence;
  bool truncated = false;
};

std::vector<Hypothesis> generate(ModelParams const &p, Vocabulary const &vocab, FeatureTable const &features,
                                 int max_len);

// Decodes every record and pairs the result with the record's sentences.
std::vector<EvalPair> decode_for_eval(ModelParams const &p, Vocabulary const &vocab,
                                      std::vector<VideoRecord> const &records, int max_len);

bool all_template_sentences(std::vector<std::vector<std::string>> const &references);

std::filesystem::path vocab_path(std::filesystem::path const &checkpoint);

// --- sweeps ------------------------------------------------------------------

inline constexpr std::array<char const *, 5> kCurveMetrics{"BLEU@1", "BLEU@2", "BLEU@3", "BLEU@4", "METEOR_LITE"};

struct SweepRow
{
  double value = 0;
  bool ok = false;
  std::string error;
  std::int64_t params = 0;
  MetricReport metrics;
};

struct SweepResult
{
  std::string axis;
  std::vector<SweepRow> rows;
  // normalized[m][r]: metric m of row r after (x - min) / min over the
  // successful rows; NaN for failed rows or when the column has a zero.
  std::array<std::vector<double>, kCurveMetrics.size()> normalized;
  bool with_svo = false;

  bool all_ok() const;
};

// Trains one model per axis value from the same seed on the train split and
// scores it on the test split.
SweepResult run_sweep(std::string const &axis, std::vector<double> const &values, RunSettings const &settings,
                      Corpus const &corpus, std::ostream &log);

void write_sweep_csv(std::ostream &out, SweepResult const &result);

// --- subcommands -------------------------------------------------------------

int cmd_train(Overrides const &flags, std::ostream &out, std::ostream &err);
int cmd_generate(std::filesystem::path const &checkpoint, std::filesystem::path const &features,
                 std::filesystem::path const &output, Overrides const &flags, std::ostream &out,
                 std::ostream &err);
int cmd_eval(std::filesystem::path const &hypotheses, std::filesystem::path const &references, bool svo,
             std::ostream &out, std::ostream &err);

struct GradcheckOptions
{
  std::array<int, 4> dims{10, 8, 12, 20}; // video, embed, hidden, vocab
  int tokens = 5;
  std::uint64_t seed = 1;
  std::optional<double> lambda; // unset: 0, 0.5, 0.7 and 1
  double mu = 1e-4;
  bool corrupt = false; // perturbs one analytic gradient entry
};

inline constexpr std::int64_t kGradcheckMaxParams = 20000;

int cmd_gradcheck(GradcheckOptions const &opts, std::ostream &out, std::ostream &err);
int cmd_sweep(std::string const &axis, std::vector<std::string> const &values, Overrides const &flags,
              std::ostream &out, std::ostream &err);

} // namespace lstme
