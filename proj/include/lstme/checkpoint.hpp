#pragma once

#include <filesystem>
#include <iosfwd>

#include "lstme/model.hpp"

namespace lstme {

struct Checkpoint
{
  ModelParams params;
  double lambda = 0.7;
  double mu = 1e-4;
};

// Text format:
//   dims <Dv> <De> <Dh> <Vsize>
//   lambda <float>
//   mu <float>
//   matrix <name> <rows> <cols>     (one per block, fixed order Tv Ts Tg..bo Th)
//   <row-major values, one matrix row per line>
// Values carry 17 significant digits, so reading back is exact.
void write_checkpoint(std::ostream &out, Checkpoint const &ckpt);
Checkpoint read_checkpoint(std::istream &in, std::string const &source = "<checkpoint>");

void save_checkpoint(std::filesystem::path const &path, Checkpoint const &ckpt);
Checkpoint load_checkpoint(std::filesystem::path const &path);

} // namespace lstme
