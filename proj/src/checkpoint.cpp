#include "lstme/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lstme/error.hpp"

namespace lstme {

namespace {

void put(std::ostream &out, double x)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  out.write(buf, ptr - buf);
}

class Reader
{
public:
  Reader(std::istream &in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string word()
  {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of file");
    return w;
  }

  void expect(std::string const &keyword)
  {
    auto w = word();
    if (w != keyword) fail("expected `" + keyword + "`, found `" + w + "`");
  }

  long long integer()
  {
    auto w = word();
    long long v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size() || v < 1) fail("bad dimension `" + w + "`");
    return v;
  }

  double real()
  {
    auto w = word();
    double v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) fail("bad number `" + w + "`");
    return v;
  }

  [[noreturn]] void fail(std::string const &what) { throw InvalidInput(source_ + ": " + what); }

private:
  std::istream &in_;
  std::string source_;
};

} // namespace

void write_checkpoint(std::ostream &out, Checkpoint const &ckpt)
{
  auto const &p = ckpt.params;
  p.validate();
  out << "dims " << p.video_dim() << ' ' << p.embed_dim() << ' ' << p.hidden_dim() << ' ' << p.vocab_size()
      << '\n';
  out << "lambda ";
  put(out, ckpt.lambda);
  out << "\nmu ";
  put(out, ckpt.mu);
  out << '\n';
  p.for_each_block([&](std::string_view name, auto const &block) {
    out << "matrix " << name << ' ' << block.rows() << ' ' << block.cols() << '\n';
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) {
        if (c) out << ' ';
        put(out, block(r, c));
      }
      out << '\n';
    }
  });
}

Checkpoint read_checkpoint(std::istream &in, std::string const &source)
{
  Reader rd(in, source);
  rd.expect("dims");
  auto const dv = rd.integer();
  auto const de = rd.integer();
  auto const dh = rd.integer();
  auto const vs = rd.integer();
  Checkpoint ckpt;
  rd.expect("lambda");
  ckpt.lambda = rd.real();
  rd.expect("mu");
  ckpt.mu = rd.real();
  ckpt.params = ModelParams::zeros(dv, de, dh, vs);
  ckpt.params.for_each_block([&](std::string_view name, auto &block) {
    rd.expect("matrix");
    rd.expect(std::string(name));
    auto const rows = rd.integer();
    auto const cols = rd.integer();
    if (rows != block.rows() || cols != block.cols())
      rd.fail("block " + std::string(name) + " is " + dims(rows, cols) + ", expected " +
              dims(block.rows(), block.cols()));
    for (Eigen::Index r = 0; r < block.rows(); ++r)
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = rd.real();
  });
  if (!ckpt.params.all_finite()) rd.fail("non-finite parameter value");
  return ckpt;
}

void save_checkpoint(std::filesystem::path const &path, Checkpoint const &ckpt)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write checkpoint: " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw InvalidInput("error writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("file not found: " + path.string());
  return read_checkpoint(in, path.string());
}

} // namespace lstme
