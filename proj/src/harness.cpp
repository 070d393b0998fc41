#include "lstme/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "lstme/error.hpp"
#include "lstme/gradcheck.hpp"

namespace lstme {

namespace {

std::string shortest(double x)
{
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string exact(double x)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double parse_double(std::string const &what, std::string const &text)
{
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw InvalidInput(what + ": not a number: `" + text + "`");
  return v;
}

void write_file(std::filesystem::path const &path, std::string const &content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << content;
}

std::filesystem::path with_suffix(std::filesystem::path const &p, std::string const &suffix)
{
  return std::filesystem::path(p.string() + suffix);
}

} // namespace

// --- settings ----------------------------------------------------------------

Hyperparams hyperparams_from(Config const &cfg, Hyperparams hp)
{
  hp.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(hp.seed)));
  hp.lambda = cfg.get_double("lambda", hp.lambda);
  hp.mu = cfg.get_double("mu", hp.mu);
  hp.lr = cfg.get_double("lr", hp.lr);
  if (auto clip = cfg.get("clip")) {
    if (*clip == "none" || *clip == "off")
      hp.clip.reset();
    else
      hp.clip = cfg.get_double("clip", 0);
  }
  hp.epochs = static_cast<int>(cfg.get_int("epochs", hp.epochs));
  hp.batch_size = static_cast<int>(cfg.get_int("batch_size", hp.batch_size));
  hp.hidden = static_cast<int>(cfg.get_int("hidden", hp.hidden));
  hp.embed = static_cast<int>(cfg.get_int("embed", hp.embed));
  hp.max_len = static_cast<int>(cfg.get_int("max_len", hp.max_len));
  return hp;
}

RunSettings resolve_settings(Overrides const &flags)
{
  RunSettings s;
  if (flags.config) s.config = Config::load(*flags.config);
  auto &cfg = s.config;
  if (flags.seed) cfg.set("seed", std::to_string(*flags.seed));
  if (flags.lambda) cfg.set("lambda", exact(*flags.lambda));
  if (flags.mu) cfg.set("mu", exact(*flags.mu));
  if (flags.lr) cfg.set("lr", exact(*flags.lr));
  if (flags.epochs) cfg.set("epochs", std::to_string(*flags.epochs));
  if (flags.batch_size) cfg.set("batch_size", std::to_string(*flags.batch_size));
  if (flags.hidden) cfg.set("hidden", std::to_string(*flags.hidden));
  if (flags.embed) cfg.set("embed", std::to_string(*flags.embed));
  if (flags.max_len) cfg.set("max_len", std::to_string(*flags.max_len));

  s.hp = hyperparams_from(cfg);
  Hyperparams probe = s.hp;
  probe.video_dim = 1;
  probe.vocab = kReservedCount;
  probe.validate();
  s.min_count = static_cast<int>(cfg.get_int("min_count", s.min_count));
  require(s.min_count >= 1, "config key `min_count` must be at least 1");
  if (cfg.has("split")) {
    auto parts = cfg.get_list("split");
    require(parts.size() == 3, "config key `split`: expected three comma-separated fractions");
    for (std::size_t i = 0; i < 3; ++i) s.split[i] = parse_double("config key `split`", parts[i]);
  }
  if (flags.out)
    s.out = *flags.out;
  else if (auto p = cfg.get_path("out"))
    s.out = p->string();
  return s;
}

Corpus load_corpus(Config const &cfg)
{
  Corpus c;
  if (auto spec_path = cfg.get_path("synthetic")) {
    c.records = synth_generate(SyntheticSpec::from_config(Config::load(*spec_path)));
    c.synthetic = true;
    return c;
  }
  if (cfg.has("subjects")) {
    c.records = synth_generate(SyntheticSpec::from_config(cfg));
    c.synthetic = true;
    return c;
  }
  auto features = cfg.get_path("features");
  if (!features) throw InvalidInput("missing config key `features` (or `synthetic`)");
  auto captions = cfg.get_path("captions");
  if (!captions) throw InvalidInput("missing config key `captions`");
  auto table = ingest_features(*features);
  c.records = join_corpus(table, read_tsv(*captions));
  require(!c.records.empty(), "no video in " + features->string() + " has a caption");
  return c;
}

TrainedModel train_on(std::vector<VideoRecord> const &records, Hyperparams hp, int min_count,
                      EpochCallback const &on_epoch)
{
  require(!records.empty(), "train: no training videos");
  TrainedModel tm;
  tm.vocab = build_vocab(all_sentences(records), min_count);
  hp.video_dim = static_cast<int>(records.front().feature.size());
  hp.vocab = tm.vocab.size();
  auto pairs = training_pairs(encode_corpus(records, tm.vocab));
  auto result = train(init_model(hp), pairs, hp, on_epoch);
  tm.checkpoint = {std::move(result.params), hp.lambda, hp.mu};
  tm.trace = std::move(result.trace);
  return tm;
}

std::vector<Hypothesis> generate(ModelParams const &p, Vocabulary const &vocab, FeatureTable const &features,
                                 int max_len)
{
  std::vector<Hypothesis> out;
  for (auto const &id : features.ids) {
    auto dec = greedy_decode(p, features.at(id), max_len);
    auto words = decode_tokens(vocab, dec.tokens);
    std::string sentence;
    for (auto const &w : words) sentence += (sentence.empty() ? "" : " ") + w;
    out.push_back({id, std::move(sentence), dec.truncated});
  }
  return out;
}

std::vector<EvalPair> decode_for_eval(ModelParams const &p, Vocabulary const &vocab,
                                      std::vector<VideoRecord> const &records, int max_len)
{
  std::vector<EvalPair> out;
  for (auto const &r : records) {
    auto dec = greedy_decode(p, r.feature, max_len);
    std::string sentence;
    for (auto const &w : decode_tokens(vocab, dec.tokens)) sentence += (sentence.empty() ? "" : " ") + w;
    out.push_back(make_eval_pair(sentence, r.sentences));
  }
  return out;
}

bool all_template_sentences(std::vector<std::vector<std::string>> const &references)
{
  for (auto const &refs : references)
    for (auto const &r : refs)
      if (!extract_svo(make_eval_pair(r, {}).hypothesis)) return false;
  return true;
}

std::filesystem::path vocab_path(std::filesystem::path const &checkpoint)
{
  return with_suffix(checkpoint, ".vocab");
}

// --- sweeps ------------------------------------------------------------------

bool SweepResult::all_ok() const
{
  return std::all_of(rows.begin(), rows.end(), [](SweepRow const &r) { return r.ok; });
}

SweepResult run_sweep(std::string const &axis, std::vector<double> const &values, RunSettings const &settings,
                      Corpus const &corpus, std::ostream &log)
{
  require(axis == "lambda" || axis == "hidden", "sweep axis must be `lambda` or `hidden`, got `" + axis + "`");
  require(values.size() >= 2, "sweep needs at least two axis values");
  std::set<double> seen(values.begin(), values.end());
  require(seen.size() == values.size(), "sweep axis values must be distinct");
  for (double v : values) {
    if (axis == "lambda")
      require(v > 0 && v < 1, "lambda sweep values must lie in (0, 1), got " + shortest(v));
    else
      require(v >= 1 && v == std::floor(v), "hidden sweep values must be positive integers, got " + shortest(v));
  }

  auto parts = split(corpus.records, settings.split, settings.hp.seed);
  require(!parts.train.empty() && !parts.test.empty(), "sweep: split leaves no train or test videos");

  SweepResult result;
  result.axis = axis;
  std::vector<std::vector<std::string>> refs;
  for (auto const &r : parts.test) refs.push_back(r.sentences);
  result.with_svo = corpus.synthetic || all_template_sentences(refs);

  for (double v : values) {
    SweepRow row;
    row.value = v;
    Hyperparams hp = settings.hp;
    if (axis == "lambda")
      hp.lambda = v;
    else
      hp.hidden = static_cast<int>(v);
    try {
      auto tm = train_on(parts.train, hp, settings.min_count);
      Hyperparams counted = hp;
      counted.video_dim = static_cast<int>(tm.checkpoint.params.video_dim());
      counted.vocab = tm.vocab.size();
      row.params = count_params(counted);
      auto pairs = decode_for_eval(tm.checkpoint.params, tm.vocab, parts.test, hp.max_len);
      row.metrics = evaluate(pairs, result.with_svo);
      row.ok = true;
      log << axis << " = " << shortest(v) << ": BLEU@4 " << format_percent(row.metrics.bleu[3]) << ", METEOR_LITE "
          << format_percent(row.metrics.meteor) << '\n';
    } catch (NumericError const &e) {
      row.error = e.what();
      log << axis << " = " << shortest(v) << ": failed: " << e.what() << '\n';
    }
    result.rows.push_back(std::move(row));
  }

  double const nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t m = 0; m < kCurveMetrics.size(); ++m) {
    std::vector<double> column;
    for (auto const &row : result.rows)
      if (row.ok) column.push_back(m < 4 ? row.metrics.bleu[m] : row.metrics.meteor);
    auto &norm = result.normalized[m];
    norm.assign(result.rows.size(), nan);
    bool positive = !column.empty() && std::all_of(column.begin(), column.end(), [](double x) { return x > 0; });
    if (!positive) {
      log << "warning: " << kCurveMetrics[m] << " has a zero value; normalised column left empty\n";
      continue;
    }
    auto const normalized = normalize_curve(column);
    for (std::size_t r = 0, k = 0; r < result.rows.size(); ++r)
      if (result.rows[r].ok) norm[r] = normalized[k++];
  }
  return result;
}

void write_sweep_csv(std::ostream &out, SweepResult const &result)
{
  out << "axis,value,status,params";
  for (auto const *m : kCurveMetrics) out << ',' << m;
  if (result.with_svo) out << ",SVO_S,SVO_V,SVO_O";
  for (auto const *m : kCurveMetrics) out << ",norm_" << m;
  out << '\n';
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    auto const &row = result.rows[r];
    out << result.axis << ',' << shortest(row.value) << ',' << (row.ok ? "ok" : "failed") << ',' << row.params;
    auto cell = [&](double x) { out << ',' << (row.ok ? shortest(x) : std::string()); };
    for (double b : row.metrics.bleu) cell(100 * b);
    cell(100 * row.metrics.meteor);
    if (result.with_svo) {
      auto const svo = row.metrics.svo.value_or(SvoResult{});
      cell(svo.subject);
      cell(svo.verb);
      cell(svo.object);
    }
    for (auto const &col : result.normalized) out << ',' << (std::isnan(col[r]) ? std::string() : shortest(col[r]));
    out << '\n';
  }
}

// --- subcommands -------------------------------------------------------------

int cmd_train(Overrides const &flags, std::ostream &out, std::ostream &err)
{
  RunSettings s;
  Corpus corpus;
  try {
    s = resolve_settings(flags);
    corpus = load_corpus(s.config);
  } catch (InvalidInput const &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::filesystem::path const ckpt_path = s.out;
  TrainedModel tm;
  try {
    tm = train_on(corpus.records, s.hp, s.min_count, [&](EpochStats const &st) {
      err << "epoch " << st.epoch << " objective " << shortest(st.objective) << '\n';
    });
  } catch (NumericError const &e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (InvalidInput const &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    save_checkpoint(ckpt_path, tm.checkpoint);
    std::ostringstream vocab;
    write_vocab(vocab, tm.vocab);
    write_file(vocab_path(ckpt_path), vocab.str());

    std::ostringstream trace;
    trace << "epoch,objective,nll,relevance\n";
    for (auto const &st : tm.trace)
      trace << st.epoch << ',' << exact(st.objective) << ',' << exact(st.nll) << ',' << exact(st.relevance) << '\n';
    auto const trace_path = s.config.get_path("trace").value_or(with_suffix(ckpt_path, ".trace.csv"));
    write_file(trace_path, trace.str());

    if (corpus.synthetic) {
      std::ostringstream feats, caps;
      write_features(feats, corpus.records);
      write_captions(caps, corpus.records);
      write_file(with_suffix(ckpt_path, ".features.tsv"), feats.str());
      write_file(with_suffix(ckpt_path, ".captions.tsv"), caps.str());
    }
    out << "checkpoint " << ckpt_path.string() << '\n' << "trace " << trace_path.string() << '\n';
  } catch (InvalidInput const &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_generate(std::filesystem::path const &checkpoint, std::filesystem::path const &features,
                 std::filesystem::path const &output, Overrides const &flags, std::ostream &out,
                 std::ostream &err)
{
  try {
    auto const s = resolve_settings(flags);
    auto const ckpt = load_checkpoint(checkpoint);
    std::ifstream vin(vocab_path(checkpoint));
    if (!vin) throw InvalidInput("file not found: " + vocab_path(checkpoint).string());
    auto const vocab = read_vocab(vin);
    require(vocab.size() == ckpt.params.vocab_size(),
            "vocabulary has " + std::to_string(vocab.size()) + " words, checkpoint expects " +
              std::to_string(ckpt.params.vocab_size()));
    auto const table = ingest_features(features);
    if (!table.ids.empty() && table.dim != ckpt.params.video_dim())
      throw InvalidInput("feature dimension mismatch: checkpoint expects " + std::to_string(ckpt.params.video_dim()) +
                         ", features file has " + std::to_string(table.dim));

    std::ostringstream buf;
    for (auto const &h : generate(ckpt.params, vocab, table, s.hp.max_len))
      buf << h.id << '\t' << h.sentence << '\t' << (h.truncated ? 1 : 0) << '\n';
    write_file(output, buf.str());
    out << "wrote " << table.ids.size() << " sentences to " << output.string() << '\n';
  } catch (InvalidInput const &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_eval(std::filesystem::path const &hypotheses, std::filesystem::path const &references, bool svo,
             std::ostream &out, std::ostream &err)
{
  try {
    auto const hyps = read_tsv(hypotheses);
    auto const refs = read_tsv(references);
    require(!hyps.empty(), "no hypotheses in " + hypotheses.string());
    std::map<std::string, std::vector<std::string>> by_id;
    for (auto const &[id, s] : refs) by_id[id].push_back(s);

    std::vector<std::string> missing;
    std::vector<EvalPair> pairs;
    std::vector<std::vector<std::string>> used;
    for (auto const &[id, s] : hyps) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        missing.push_back(id);
        continue;
      }
      pairs.push_back(make_eval_pair(s, it->second));
      used.push_back(it->second);
    }
    if (!missing.empty()) {
      std::string list;
      for (auto const &id : missing) list += (list.empty() ? "" : ", ") + id;
      throw InvalidInput("hypothesis ids missing from references: " + list);
    }

    if (!all_template_sentences(used))
      err << "notice: references are not synthetic template sentences. METEOR_LITE has no synonym stage and "
             "desk-scale models use no pretrained CNN features, so these scores are not comparable to published "
             "full-corpus BLEU/METEOR figures.\n";

    auto const report = evaluate(pairs, svo);
    if (report.svo && report.svo->nonconforming > 0)
      err << "warning: " << report.svo->nonconforming << " of " << report.svo->items
          << " hypotheses do not follow the SVO template and score 0\n";
    out << format_report(report);
  } catch (InvalidInput const &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_gradcheck(GradcheckOptions const &opts, std::ostream &out, std::ostream &err)
{
  auto const [dv, de, dh, vs] = opts.dims;
  if (dv < 1 || de < 1 || dh < 1 || vs <= kReservedCount || opts.tokens < 2) {
    err << "error: gradcheck needs positive dims, a vocabulary above " << kReservedCount
        << " and at least 2 tokens\n";
    return kExitUsage;
  }
  Hyperparams hp;
  hp.video_dim = dv;
  hp.embed = de;
  hp.hidden = dh;
  hp.vocab = vs;
  auto const n = count_params(hp);
  if (n > kGradcheckMaxParams) {
    err << "error: " << n << " parameters exceed the gradcheck limit of " << kGradcheckMaxParams << '\n';
    return kExitUsage;
  }

  auto const problem = random_problem(dv, de, dh, vs, opts.tokens, opts.seed);
  std::vector<double> lambdas = opts.lambda ? std::vector<double>{*opts.lambda} : std::vector<double>{0, 0.5, 0.7, 1};
  std::function<void(ModelParams &)> tamper;
  if (opts.corrupt) tamper = [](ModelParams &g) { g.softmax(0, 0) += 1.0; };

  bool pass = true;
  for (double lambda : lambdas) {
    for (double mu : {0.0, opts.mu}) {
      auto report = gradient_check(problem.params, problem.pairs, lambda, mu, 1e-5, 1e-4, tamper);
      out << "lambda " << shortest(lambda) << " mu " << shortest(mu) << '\n';
      for (auto const &b : report.blocks)
        out << "  " << b.name << " entries " << b.entries << " max_rel_error " << shortest(b.max_rel_error) << '\n';
      out << "  " << (report.pass ? "PASS" : "FAIL") << " max_rel_error " << shortest(report.max_rel_error)
          << " tolerance " << shortest(report.tolerance) << '\n';
      pass = pass && report.pass;
      if (mu == opts.mu) break;
    }
  }
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitNumeric;
}

int cmd_sweep(std::string const &axis, std::vector<std::string> const &values, Overrides const &flags,
              std::ostream &out, std::ostream &err)
{
  SweepResult result;
  std::filesystem::path csv_path;
  try {
    std::vector<double> axis_values;
    for (auto const &v : values) axis_values.push_back(parse_double("sweep value", v));
    Overrides f = flags;
    auto s = resolve_settings(f);
    csv_path = flags.out ? std::filesystem::path(*flags.out) : std::filesystem::path("sweep.csv");
    auto corpus = load_corpus(s.config);
    result = run_sweep(axis, axis_values, s, corpus, err);
    std::ostringstream csv;
    write_sweep_csv(csv, result);
    write_file(csv_path, csv.str());
    out << csv.str();
  } catch (InvalidInput const &e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return result.all_ok() ? kExitOk : kExitNumeric;
}

} // namespace lstme
