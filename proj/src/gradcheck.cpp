#include "lstme/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lstme/error.hpp"
#include "lstme/random.hpp"

namespace lstme {

double relative_error(double analytic, double numeric)
{
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

double mean_pair_loss(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda)
{
  return objective(p, pairs, lambda, 0.0);
}

} // namespace

GradcheckReport gradient_check(ModelParams const &p, std::vector<TrainingPair> const &pairs, double lambda,
                               double mu, double step, double tolerance,
                               std::function<void(ModelParams &)> const &tamper)
{
  ModelParams analytic = objective_grad(p, pairs, lambda, mu);
  if (tamper) tamper(analytic);

  GradcheckReport report;
  report.tolerance = tolerance;
  ModelParams probe = p;

  std::vector<double *> grad_blocks;
  analytic.for_each_block([&](std::string_view, auto &b) { grad_blocks.push_back(b.data()); });

  std::size_t k = 0;
  probe.for_each_block([&](std::string_view name, auto &block) {
    BlockCheck check{std::string(name), block.size(), 0.0};
    double const *grad = grad_blocks[k++];
    for (Eigen::Index i = 0; i < block.size(); ++i) {
      double &x = block.data()[i];
      double const saved = x;
      x = saved + step;
      double const loss_up = mean_pair_loss(probe, pairs, lambda);
      double const reg_up = regularizer(probe);
      x = saved - step;
      double const loss_down = mean_pair_loss(probe, pairs, lambda);
      double const reg_down = regularizer(probe);
      x = saved;
      // Each term is differenced on its own: the regulariser gradient can be
      // orders of magnitude below the loss value it would otherwise cancel against.
      double const numeric = (loss_up - loss_down) / (2 * step) + mu * (reg_up - reg_down) / (2 * step);
      check.max_rel_error = std::max(check.max_rel_error, relative_error(grad[i], numeric));
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.blocks.push_back(std::move(check));
  });
  report.pass = report.max_rel_error <= tolerance;
  return report;
}

GradcheckProblem random_problem(int video_dim, int embed, int hidden, int vocab, int tokens, std::uint64_t seed,
                                double scale)
{
  require(vocab > kReservedCount, "random_problem: vocabulary needs at least one content word");
  require(tokens >= 2, "random_problem: a sentence has at least START and END");
  GradcheckProblem prob;
  prob.params = ModelParams::zeros(video_dim, embed, hidden, vocab);
  Rng rng(seed);
  prob.params.for_each_block([&](std::string_view, auto &b) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-scale, scale);
  });
  Vec64 v(video_dim);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  TokenSeq seq{kStart};
  for (int t = 0; t + 2 < tokens; ++t)
    seq.push_back(kReservedCount + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab - kReservedCount))));
  seq.push_back(kEnd);
  prob.pairs.push_back({std::move(v), std::move(seq)});
  return prob;
}

} // namespace lstme
