#include "lstme/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "lstme/error.hpp"

namespace lstme {

Vocabulary::Vocabulary()
{
  add(std::string(start_word()));
  add(std::string(end_word()));
  add(std::string(unk_word()));
}

void Vocabulary::add(std::string word)
{
  auto [it, inserted] = index_.emplace(word, size());
  require(inserted, "vocabulary: duplicate word `" + word + "`");
  words_.push_back(std::move(word));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words)
{
  require(words.size() >= kReservedCount && words[kStart] == start_word() &&
            words[kEnd] == end_word() && words[kUnk] == unk_word(),
          "vocabulary: reserved tokens missing from the head of the word list");
  Vocabulary v;
  for (std::size_t i = kReservedCount; i < words.size(); ++i) v.add(std::move(words[i]));
  return v;
}

std::optional<int> Vocabulary::find(std::string_view word) const
{
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string const &Vocabulary::word(int index) const
{
  require(index >= 0 && index < size(), "vocabulary: index " + std::to_string(index) + " out of range");
  return words_[static_cast<std::size_t>(index)];
}

namespace {

bool is_word_char(unsigned char c)
{
  return std::isalnum(c) || c >= 0x80;
}

bool is_reserved(std::string_view w)
{
  return w == Vocabulary::start_word() || w == Vocabulary::end_word() || w == Vocabulary::unk_word();
}

} // namespace

std::vector<std::string> tokenize(std::string_view sentence)
{
  std::vector<std::string> out;
  std::istringstream in{std::string(sentence)};
  std::string raw;
  while (in >> raw) {
    if (is_reserved(raw)) {
      out.push_back(raw);
      continue;
    }
    std::string word;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto const c = static_cast<unsigned char>(raw[i]);
      if (is_word_char(c)) {
        word.push_back(static_cast<char>(std::tolower(c)));
      } else if ((c == '\'' || c == '-') && !word.empty() && i + 1 < raw.size() &&
                 is_word_char(static_cast<unsigned char>(raw[i + 1]))) {
        word.push_back(static_cast<char>(c));
      } else if (!word.empty()) {
        out.push_back(std::move(word));
        word.clear();
      }
    }
    if (!word.empty()) out.push_back(std::move(word));
  }
  return out;
}

Vocabulary build_vocab(std::vector<std::string> const &sentences, int min_count)
{
  require(!sentences.empty(), "build_vocab: empty corpus");
  std::map<std::string, long> freq;
  for (auto const &s : sentences)
    for (auto &w : tokenize(s))
      if (!is_reserved(w)) ++freq[w];

  std::vector<std::pair<std::string, long>> kept;
  for (auto &[w, n] : freq)
    if (n >= min_count) kept.emplace_back(w, n);
  // freq is ordered lexicographically, so a stable sort on count keeps the tie-break.
  std::stable_sort(kept.begin(), kept.end(),
                   [](auto const &a, auto const &b) { return a.second > b.second; });

  std::vector<std::string> words{std::string(Vocabulary::start_word()),
                                 std::string(Vocabulary::end_word()),
                                 std::string(Vocabulary::unk_word())};
  for (auto &[w, n] : kept) words.push_back(w);
  return Vocabulary::from_words(std::move(words));
}

Vec64 binary_tf(TokenSeq const &tokens, int vocab_size)
{
  Vec64 tf = Vec64::Zero(vocab_size);
  for (int t : tokens) {
    require(t >= 0 && t < vocab_size, "binary_tf: token " + std::to_string(t) + " out of range");
    if (t != kStart && t != kEnd) tf[t] = 1.0;
  }
  return tf;
}

EncodedSentence encode_sentence(Vocabulary const &vocab, std::string_view sentence)
{
  EncodedSentence out;
  out.tokens.push_back(kStart);
  for (auto const &w : tokenize(sentence)) {
    if (w == Vocabulary::start_word() || w == Vocabulary::end_word()) continue;
    out.tokens.push_back(vocab.index(w));
  }
  out.tokens.push_back(kEnd);
  out.tf = binary_tf(out.tokens, vocab.size());
  return out;
}

std::vector<std::string> decode_tokens(Vocabulary const &vocab, TokenSeq const &tokens)
{
  std::vector<std::string> out;
  for (int t : tokens)
    if (t != kStart && t != kEnd) out.push_back(vocab.word(t));
  return out;
}

void write_vocab(std::ostream &out, Vocabulary const &vocab)
{
  for (auto const &w : vocab.words()) out << w << '\n';
}

Vocabulary read_vocab(std::istream &in)
{
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (!w.empty()) words.push_back(std::move(w));
  }
  return Vocabulary::from_words(std::move(words));
}

// --- corpora -----------------------------------------------------------------

FeatureTable parse_features(std::istream &in, std::string const &source)
{
  FeatureTable table;
  std::unordered_map<std::string, long> rows;
  std::string line;
  int lineno = 0;
  auto fail = [&](std::string const &what) {
    throw InvalidInput(source + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto const t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto const tab = line.find('\t');
    if (tab == std::string::npos) fail("expected `<id>\\t<f1>,<f2>,...`");
    auto id = trim(std::string_view(line).substr(0, tab));
    if (id.empty()) fail("empty video id");

    std::vector<double> values;
    for (auto const &field : split_list(std::string_view(line).substr(tab + 1))) {
      double x = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(x))
        fail("non-numeric feature value `" + field + "`");
      values.push_back(x);
    }
    if (values.empty()) fail("no feature values");
    auto const n = static_cast<Eigen::Index>(values.size());
    if (table.dim == 0) table.dim = n;
    if (n != table.dim)
      fail("feature dimension " + std::to_string(n) + " differs from " + std::to_string(table.dim));

    Eigen::Map<Vec64 const> row(values.data(), n);
    auto it = table.vectors.find(id);
    if (it == table.vectors.end()) {
      table.ids.push_back(id);
      table.vectors.emplace(id, row);
      rows[id] = 1;
    } else {
      it->second += row;
      ++rows[id];
    }
  }
  for (auto &[id, v] : table.vectors) v /= static_cast<double>(rows[id]);
  return table;
}

FeatureTable ingest_features(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) throw InvalidInput("file not found: " + path.string());
  return parse_features(in, path.string());
}

std::vector<std::pair<std::string, std::string>> parse_tsv(std::istream &in, std::string const &source)
{
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto const t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto const tab = line.find('\t');
    if (tab == std::string::npos)
      throw InvalidInput(source + ":" + std::to_string(lineno) + ": expected `<id>\\t<sentence>`");
    auto id = trim(std::string_view(line).substr(0, tab));
    auto rest = std::string_view(line).substr(tab + 1);
    // Extra tab-separated columns (e.g. a truncation flag) are ignored.
    auto sentence = trim(rest.substr(0, rest.find('\t')));
    out.emplace_back(std::move(id), std::move(sentence));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_tsv(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) throw InvalidInput("file not found: " + path.string());
  return parse_tsv(in, path.string());
}

std::vector<VideoRecord> join_corpus(FeatureTable const &features,
                                     std::vector<std::pair<std::string, std::string>> const &captions)
{
  std::unordered_map<std::string, std::vector<std::string>> by_id;
  for (auto const &[id, sentence] : captions) {
    require(features.vectors.count(id) != 0, "caption for video `" + id + "` has no features");
    by_id[id].push_back(sentence);
  }
  std::vector<VideoRecord> out;
  for (auto const &id : features.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    out.push_back({id, features.at(id), it->second});
  }
  return out;
}

std::vector<CaptionedVideo> encode_corpus(std::vector<VideoRecord> const &records, Vocabulary const &vocab)
{
  std::vector<CaptionedVideo> out;
  out.reserve(records.size());
  for (auto const &r : records) {
    CaptionedVideo cv{r.id, r.feature, {}, r.sentences};
    for (auto const &s : r.sentences) cv.captions.push_back(encode_sentence(vocab, s).tokens);
    out.push_back(std::move(cv));
  }
  return out;
}

std::vector<std::string> all_sentences(std::vector<VideoRecord> const &records)
{
  std::vector<std::string> out;
  for (auto const &r : records) out.insert(out.end(), r.sentences.begin(), r.sentences.end());
  return out;
}

namespace {

std::string format_double(double x)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

} // namespace

void write_features(std::ostream &out, std::vector<VideoRecord> const &records)
{
  for (auto const &r : records) {
    out << r.id << '\t';
    for (Eigen::Index i = 0; i < r.feature.size(); ++i) out << (i ? "," : "") << format_double(r.feature[i]);
    out << '\n';
  }
}

void write_captions(std::ostream &out, std::vector<VideoRecord> const &records)
{
  for (auto const &r : records)
    for (auto const &s : r.sentences) out << r.id << '\t' << s << '\n';
}

// --- synthetic SVO corpus ----------------------------------------------------

void SyntheticSpec::validate() const
{
  require(!subjects.empty() && !verbs.empty() && !objects.empty(),
          "synthetic spec: subjects, verbs and objects must be non-empty");
  require(dim >= 1, "synthetic spec: dim must be positive");
  require(noise_sigma >= 0, "synthetic spec: noise_sigma must be non-negative");
  require(count >= 1, "synthetic spec: count must be positive");
}

SyntheticSpec SyntheticSpec::from_config(Config const &cfg)
{
  SyntheticSpec s;
  s.subjects = cfg.get_list("subjects");
  s.verbs = cfg.get_list("verbs");
  s.objects = cfg.get_list("objects");
  s.dim = static_cast<int>(cfg.get_int("dim", s.dim));
  s.noise_sigma = cfg.get_double("noise_sigma", s.noise_sigma);
  s.count = static_cast<int>(cfg.get_int("count", s.count));
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(s.seed)));
  s.validate();
  return s;
}

namespace {

bool is_vowel(char c)
{
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

} // namespace

std::string ing_form(std::string const &verb)
{
  std::string v = verb;
  auto const n = v.size();
  if (n >= 3 && v.back() == 'e' && v[n - 2] != 'e' && v[n - 2] != 'i') {
    v.pop_back();
  } else if (n >= 3 && !is_vowel(v[n - 1]) && is_vowel(v[n - 2]) && !is_vowel(v[n - 3]) &&
             std::string_view("wxy").find(v[n - 1]) == std::string_view::npos &&
             !(n >= 4 && is_vowel(v[n - 4]))) {
    v.push_back(v.back());
  }
  return v + "ing";
}

std::string svo_sentence(std::string const &subject, std::string const &verb, std::string const &object)
{
  return subject + " is " + ing_form(verb) + " a " + object;
}

std::vector<VideoRecord> synth_generate(SyntheticSpec const &spec)
{
  spec.validate();
  Rng rng(spec.seed);
  auto draw_unit = [&]() {
    Vec64 v(spec.dim);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    return Vec64(v / v.norm());
  };
  auto draw_set = [&](std::size_t n) {
    std::vector<Vec64> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw_unit());
    return out;
  };
  auto const subj = draw_set(spec.subjects.size());
  auto const verb = draw_set(spec.verbs.size());
  auto const obj = draw_set(spec.objects.size());

  std::vector<VideoRecord> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  auto const width = std::to_string(spec.count).size();
  for (int k = 0; k < spec.count; ++k) {
    auto const s = rng.below(spec.subjects.size());
    auto const v = rng.below(spec.verbs.size());
    auto const o = rng.below(spec.objects.size());
    Vec64 feature = subj[s] + verb[v] + obj[o];
    for (Eigen::Index i = 0; i < feature.size(); ++i) feature[i] += spec.noise_sigma * rng.normal();
    auto id = std::to_string(k);
    id = "syn" + std::string(width - id.size(), '0') + id;
    out.push_back({std::move(id), std::move(feature),
                   {svo_sentence(spec.subjects[s], spec.verbs[v], spec.objects[o])}});
  }
  return out;
}

} // namespace lstme
