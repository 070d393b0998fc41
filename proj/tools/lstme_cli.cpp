// Command-line front end: train, generate, eval, gradcheck, sweep.

#include <iostream>

#include "CLI11.hpp"
#include "lstme/harness.hpp"

namespace {

void add_shared(CLI::App *cmd, lstme::Overrides &o)
{
  cmd->add_option("--config", o.config, "key = value config file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--lambda", o.lambda, "likelihood weight in [0, 1]");
  cmd->add_option("--mu", o.mu, "L2 regularisation weight");
  cmd->add_option("--lr", o.lr, "SGD step size");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  cmd->add_option("--hidden", o.hidden, "LSTM hidden size");
  cmd->add_option("--embed", o.embed, "embedding size");
  cmd->add_option("--max-len", o.max_len, "decode length cap (tokens, END included)");
  cmd->add_option("--out", o.out, "output path");
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Joint embedding and LSTM sentence generation for video features"};
  app.require_subcommand(1);

  lstme::Overrides flags;

  auto *train = app.add_subcommand("train", "train a model and write checkpoint + loss trace");
  add_shared(train, flags);

  std::string ckpt, features, output;
  auto *gen = app.add_subcommand("generate", "greedy-decode one sentence per video");
  gen->add_option("checkpoint", ckpt, "checkpoint file")->required();
  gen->add_option("features", features, "features TSV")->required();
  gen->add_option("output", output, "hypotheses TSV to write")->required();
  add_shared(gen, flags);

  std::string hyps, refs;
  bool svo = false;
  auto *eval = app.add_subcommand("eval", "score hypotheses against references");
  eval->add_option("hypotheses", hyps, "hypotheses TSV")->required();
  eval->add_option("references", refs, "references TSV")->required();
  eval->add_flag("--svo", svo, "also report SVO accuracy on template sentences");

  lstme::GradcheckOptions gc;
  std::vector<int> dims;
  std::optional<long long> gc_seed;
  auto *grad = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  grad->add_option("--dims", dims, "Dv,De,Dh,Vsize")->delimiter(',')->expected(4);
  grad->add_option("--tokens", gc.tokens, "sentence length in tokens, START and END included");
  grad->add_option("--seed", gc_seed, "random seed");
  grad->add_option("--lambda", gc.lambda, "single lambda to check (default: 0, 0.5, 0.7, 1)");
  grad->add_option("--mu", gc.mu, "regularisation weight for the objective check");
  grad->add_flag("--corrupt", gc.corrupt, "perturb the analytic gradient (negative control)");

  std::string axis;
  std::vector<std::string> values;
  auto *sweep = app.add_subcommand("sweep", "train and score one model per axis value");
  sweep->add_option("axis", axis, "lambda or hidden")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->delimiter(',')->required();
  add_shared(sweep, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return lstme::cmd_train(flags, std::cout, std::cerr);
    if (*gen) return lstme::cmd_generate(ckpt, features, output, flags, std::cout, std::cerr);
    if (*eval) return lstme::cmd_eval(hyps, refs, svo, std::cout, std::cerr);
    if (*grad) {
      if (!dims.empty()) std::copy(dims.begin(), dims.end(), gc.dims.begin());
      if (gc_seed) gc.seed = static_cast<std::uint64_t>(*gc_seed);
      return lstme::cmd_gradcheck(gc, std::cout, std::cerr);
    }
    if (*sweep) return lstme::cmd_sweep(axis, values, flags, std::cout, std::cerr);
  } catch (lstme::InvalidInput const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return lstme::kExitUsage;
  } catch (lstme::NumericError const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return lstme::kExitNumeric;
  }
  return lstme::kExitUsage;
}
