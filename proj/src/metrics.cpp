#include "lstme/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "lstme/data.hpp"
#include "lstme/error.hpp"

namespace lstme {

namespace {

Words content_words(std::string const &sentence)
{
  Words out;
  for (auto &w : tokenize(sentence))
    if (w != Vocabulary::start_word() && w != Vocabulary::end_word() && w != Vocabulary::unk_word())
      out.push_back(std::move(w));
  return out;
}

using NgramCount = std::map<Words, long>;

NgramCount ngrams(Words const &words, std::size_t n)
{
  NgramCount out;
  for (std::size_t i = 0; i + n <= words.size(); ++i)
    ++out[Words(words.begin() + static_cast<long>(i), words.begin() + static_cast<long>(i + n))];
  return out;
}

bool ends_with(std::string const &s, std::string const &suffix)
{
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

EvalPair make_eval_pair(std::string const &hypothesis, std::vector<std::string> const &references)
{
  EvalPair p{content_words(hypothesis), {}};
  for (auto const &r : references) p.references.push_back(content_words(r));
  return p;
}

double BleuResult::precision(int n) const
{
  auto const k = static_cast<std::size_t>(n - 1);
  return total[k] == 0 ? 0.0 : static_cast<double>(matched[k]) / static_cast<double>(total[k]);
}

BleuResult bleu_corpus(std::vector<EvalPair> const &pairs, int max_n)
{
  require(!pairs.empty(), "bleu_corpus: empty hypothesis corpus");
  require(max_n >= 1 && max_n <= 4, "bleu_corpus: max_n must lie in 1..4");
  BleuResult r;
  r.matched.assign(static_cast<std::size_t>(max_n), 0);
  r.total.assign(static_cast<std::size_t>(max_n), 0);

  for (auto const &p : pairs) {
    require(!p.references.empty(), "bleu_corpus: hypothesis without references");
    auto const c = static_cast<long>(p.hypothesis.size());
    r.hyp_length += c;
    long best = -1;
    for (auto const &ref : p.references) {
      auto const len = static_cast<long>(ref.size());
      if (best < 0 || std::abs(len - c) < std::abs(best - c) || (std::abs(len - c) == std::abs(best - c) && len < best))
        best = len;
    }
    r.ref_length += best;

    for (int n = 1; n <= max_n; ++n) {
      auto const hyp = ngrams(p.hypothesis, static_cast<std::size_t>(n));
      NgramCount max_ref;
      for (auto const &ref : p.references)
        for (auto const &[g, cnt] : ngrams(ref, static_cast<std::size_t>(n)))
          max_ref[g] = std::max(max_ref[g], cnt);
      for (auto const &[g, cnt] : hyp) {
        auto it = max_ref.find(g);
        r.matched[static_cast<std::size_t>(n - 1)] += std::min(cnt, it == max_ref.end() ? 0L : it->second);
        r.total[static_cast<std::size_t>(n - 1)] += cnt;
      }
    }
  }

  if (r.hyp_length == 0)
    r.brevity_penalty = 0;
  else if (r.hyp_length > r.ref_length)
    r.brevity_penalty = 1;
  else
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_length) / static_cast<double>(r.hyp_length));

  double log_sum = 0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    double const pn = r.precision(n);
    if (pn == 0) zero = true;
    if (!zero) log_sum += std::log(pn);
    r.score.push_back(zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / n));
  }
  return r;
}

std::string meteor_stem(std::string const &word)
{
  for (std::string suffix : {"ing", "es", "ed", "s"}) {
    if (!ends_with(word, suffix) || word.size() < suffix.size() + 3) continue;
    std::string stem = word.substr(0, word.size() - suffix.size());
    // running -> runn -> run, stopped -> stopp -> stop
    if ((suffix == "ing" || suffix == "ed") && stem.size() >= 3 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
        std::string_view("aeioulszf").find(stem.back()) == std::string_view::npos)
      stem.pop_back();
    return stem;
  }
  return word;
}

MeteorAlignment meteor_align(Words const &hyp, Words const &ref)
{
  std::vector<int> link(hyp.size(), -1);
  std::vector<bool> used(ref.size(), false);

  auto stage = [&](auto const &same) {
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (link[i] >= 0) continue;
      int pick = -1;
      // Prefer the reference position that extends the previous chunk.
      if (i > 0 && link[i - 1] >= 0) {
        auto const next = static_cast<std::size_t>(link[i - 1] + 1);
        if (next < ref.size() && !used[next] && same(hyp[i], ref[next])) pick = static_cast<int>(next);
      }
      for (std::size_t j = 0; pick < 0 && j < ref.size(); ++j)
        if (!used[j] && same(hyp[i], ref[j])) pick = static_cast<int>(j);
      if (pick >= 0) {
        link[i] = pick;
        used[static_cast<std::size_t>(pick)] = true;
      }
    }
  };
  stage([](std::string const &a, std::string const &b) { return a == b; });
  stage([](std::string const &a, std::string const &b) { return meteor_stem(a) == meteor_stem(b); });

  MeteorAlignment a;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (link[i] < 0) continue;
    ++a.matches;
    if (i == 0 || link[i - 1] < 0 || link[i] != link[i - 1] + 1) ++a.chunks;
  }
  if (a.matches == 0) return a;
  double const m = a.matches;
  a.precision = m / static_cast<double>(hyp.size());
  a.recall = m / static_cast<double>(ref.size());
  a.fmean = 10 * a.precision * a.recall / (a.recall + 9 * a.precision);
  a.penalty = 0.5 * std::pow(a.chunks / m, 3);
  a.score = a.fmean * (1 - a.penalty);
  return a;
}

double meteor_lite(std::vector<EvalPair> const &pairs)
{
  require(!pairs.empty(), "meteor_lite: empty corpus");
  double sum = 0;
  for (auto const &p : pairs) {
    double best = 0;
    for (auto const &ref : p.references) best = std::max(best, meteor_align(p.hypothesis, ref).score);
    sum += best;
  }
  return sum / static_cast<double>(pairs.size());
}

std::optional<SvoTriple> extract_svo(Words const &w)
{
  if (w.size() != 5 || w[1] != "is" || w[3] != "a" || !ends_with(w[2], "ing") || w[2].size() <= 3)
    return std::nullopt;
  return SvoTriple{w[0], w[2].substr(0, w[2].size() - 3), w[4]};
}

SvoResult svo_accuracy(std::vector<EvalPair> const &pairs)
{
  require(!pairs.empty(), "svo_accuracy: empty corpus");
  SvoResult r;
  long s = 0, v = 0, o = 0;
  for (auto const &p : pairs) {
    ++r.items;
    auto hyp = extract_svo(p.hypothesis);
    if (!hyp) {
      ++r.nonconforming;
      continue;
    }
    std::set<std::string> subj, verb, obj;
    for (auto const &ref : p.references) {
      if (auto t = extract_svo(ref)) {
        subj.insert(t->subject);
        verb.insert(t->verb);
        obj.insert(t->object);
      }
    }
    s += subj.count(hyp->subject);
    v += verb.count(hyp->verb);
    o += obj.count(hyp->object);
  }
  auto pct = [&](long k) { return 100.0 * static_cast<double>(k) / static_cast<double>(r.items); };
  r.subject = pct(s);
  r.verb = pct(v);
  r.object = pct(o);
  return r;
}

std::vector<double> normalize_curve(std::vector<double> const &values)
{
  require(!values.empty(), "normalize_curve: empty input");
  for (double x : values) require(x > 0, "normalize_curve: values must be positive");
  double const lo = *std::min_element(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(values.size());
  for (double x : values) out.push_back((x - lo) / lo);
  return out;
}

MetricReport evaluate(std::vector<EvalPair> const &pairs, bool with_svo)
{
  MetricReport r;
  auto const bleu = bleu_corpus(pairs, 4);
  std::copy(bleu.score.begin(), bleu.score.end(), r.bleu.begin());
  r.meteor = meteor_lite(pairs);
  if (with_svo) r.svo = svo_accuracy(pairs);
  return r;
}

std::string format_percent(double fraction)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

std::string format_report(MetricReport const &r)
{
  std::ostringstream out;
  for (int n = 0; n < 4; ++n) out << "BLEU@" << n + 1 << " = " << format_percent(r.bleu[static_cast<std::size_t>(n)]) << '\n';
  out << "METEOR_LITE = " << format_percent(r.meteor) << '\n';
  if (r.svo) {
    out << "SVO_S = " << format_percent(r.svo->subject / 100) << '\n';
    out << "SVO_V = " << format_percent(r.svo->verb / 100) << '\n';
    out << "SVO_O = " << format_percent(r.svo->object / 100) << '\n';
  }
  return out.str();
}

} // namespace lstme
