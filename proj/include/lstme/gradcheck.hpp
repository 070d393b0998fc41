#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lstme/model.hpp"

namespace lstme {

// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

struct BlockCheck
{
  std::string name;
  std::int64_t entries = 0;
  double max_rel_error = 0;
};

struct GradcheckReport
{
  std::vector<BlockCheck> blocks;
  double max_rel_error = 0;
  double tolerance = 0;
  bool pass = false;
};

// Compares objective_grad against central differences of objective, entry by
// entry. `tamper` runs on the analytic gradient before comparison and exists
// for negative-control tests.
GradcheckReport gradient_check(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda,
                               double mu, double step = 1e-5, double tolerance = 1e-4,
                               std::function<void(ModelParams &)> const &tamper = {});

struct GradcheckProblem
{
  ModelParams params;
  std::vector<TrainingPair> pairs;
};

// Random model with entries uniform on [-scale, scale], a N(0,1) video and one
// sentence of `tokens` tokens (START, random words, END).
GradcheckProblem random_problem(int video_dim, int embed, int hidden, int vocab, int tokens, std::uint64_t seed,
                                double scale = 0.5);

} // namespace lstme
