#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topicforge/dataset.hpp"
#include "topicforge/eval/evaluate.hpp"
#include "topicforge/pipeline.hpp"
#include "topicforge/serve.hpp"
#include "topicforge/synthetic.hpp"

namespace topicforge {

/// Exit codes: 0 success, 1 usage error, 2 runtime error.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

class UsageError : public Error {
 public:
  using Error::Error;
};

namespace cli {

struct PreprocessArgs {
  std::string input;
  std::string output;
  std::size_t max_vocab = 5000;
  std::size_t min_df = 5;
  double max_df_ratio = 0.7;
  std::size_t min_token_len = 3;
  std::string stopwords = "english";
  bool pretokenized = false;
  std::optional<int> num_slices;
};

struct TrainArgs {
  std::string dataset;
  std::string model;
  std::optional<std::size_t> k;
  std::optional<std::size_t> depth;
  std::size_t iters = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t infer_sweeps = 100;
  std::map<std::string, double> hyper;
};

struct EvalArgs {
  std::string artifact;
  std::string dataset;
  std::string metrics;
  std::optional<std::size_t> top_t;
  std::optional<std::size_t> td_top_t;
  std::size_t window = 110;
  std::string out;
};

struct InferArgs {
  std::string artifact;
  std::optional<std::string> text;
  std::optional<std::string> file;
  std::optional<std::size_t> sweeps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> lang;
  std::optional<std::size_t> slice;
};

struct ServeArgs {
  std::string artifact;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::optional<std::string> ui_dir;
};

struct SyntheticArgs {
  std::string kind;
  std::size_t docs = 500;
  std::size_t vocab = 100;
  std::size_t k = 5;
  std::uint64_t seed = 1;
  std::size_t slices = 3;
  std::string out;
};

inline std::set<std::string> read_word_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read stopword file " + path);
  std::set<std::string> out;
  std::string w;
  while (in >> w) out.insert(w);
  return out;
}

inline int cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  PreprocessConfig cfg;
  cfg.max_vocab = a.max_vocab;
  cfg.min_doc_freq = a.min_df;
  cfg.max_doc_freq_ratio = a.max_df_ratio;
  cfg.min_token_len = a.min_token_len;
  cfg.pretokenized = a.pretokenized;
  if (a.stopwords == "none") cfg.stopwords.clear();
  else if (a.stopwords != "english") cfg.stopwords = read_word_file(a.stopwords);
  if (a.pretokenized) cfg.stopwords.clear();

  std::ifstream in(a.input);
  if (!in) throw Error("cannot open input " + a.input);
  std::vector<RawDocument> raw;
  std::string line;
  std::size_t lineno = 0;
  const std::string where = std::filesystem::path(a.input).filename().string();
  auto fail = [&](const std::string& msg) { throw FormatError(where + ":" + std::to_string(lineno) + ": " + msg); };
  int max_time = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail("expected a JSON object");
    RawDocument r;
    try {
      bool has_text = false;
      for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "text") {
          r.text = v.get<std::string>();
          has_text = true;
        } else if (k == "tokens") {
          for (const auto& t : v) r.text += t.get<std::string>() + " ";
          has_text = true;
        } else if (k == "label") r.meta.label = v.get<int>();
        else if (k == "time") r.meta.time_slice = v.get<int>();
        else if (k == "pair") r.meta.pair_id = v.get<int>();
        else if (k == "lang") r.meta.language = v.get<std::string>();
        else if (k == "split") {
          const auto s = v.get<std::string>();
          if (s != "train" && s != "test") fail("split must be 'train' or 'test'");
          r.test = s == "test";
        } else fail("unknown field '" + k + "'");
      }
      if (!has_text) fail("missing 'text'");
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (r.meta.time_slice) max_time = std::max(max_time, *r.meta.time_slice);
    raw.push_back(std::move(r));
  }
  std::optional<int> slices = a.num_slices;
  if (!slices && max_time >= 0) slices = max_time + 1;
  auto result = preprocess_documents(raw, cfg, slices);
  save_dataset(result.corpus, a.output);
  char buf[128];
  std::snprintf(buf, sizeof buf, "docs=%zu dropped=%zu vocab=%zu avg_len=%.2f", result.summary.docs,
                result.summary.dropped, result.summary.vocab, result.summary.avg_len);
  out << buf << '\n';
  return kExitOk;
}

inline int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg;
  cfg.model_kind = parse_model_kind(a.model);
  if (cfg.model_kind == ModelKind::hlda) {
    if (a.k && !a.depth) throw UsageError("hlda takes --depth, not --k");
    cfg.num_topics = a.depth.value_or(3);
  } else {
    if (a.depth) throw UsageError("--depth applies to hlda only");
    cfg.num_topics = a.k.value_or(10);
  }
  const auto allowed = RunConfig::allowed_hyperparameters(cfg.model_kind);
  for (const auto& [name, v] : a.hyper)
    if (!allowed.count(name)) throw UsageError("--" + name + " does not apply to model " + a.model);
  cfg.hyperparameters = a.hyper;
  cfg.iterations = a.iters;
  cfg.infer_sweeps = a.infer_sweeps;
  cfg.seed = a.seed;
  cfg.dataset_path = a.dataset;
  cfg.output_path = a.out;
  try {
    RunConfig probe = cfg;
    probe.resolve();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto result = train(cfg);
  char buf[160];
  std::snprintf(buf, sizeof buf, "trained model=%s K=%zu seconds=%.3f", a.model.c_str(), result.artifact.num_topics,
                result.seconds);
  out << buf << '\n';
  return kExitOk;
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedModel m = load_model(a.artifact);
  const Corpus corpus = load_dataset(a.dataset);
  EvalOptions opt;
  std::stringstream ss(a.metrics);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (!metric_families().count(item)) throw UsageError("unknown metric '" + item + "'");
    opt.metrics.insert(item);
  }
  if (a.top_t) {
    opt.t_coherence = *a.top_t;
    opt.t_uniqueness = *a.top_t;
  }
  if (a.td_top_t) opt.t_diversity = *a.td_top_t;
  opt.cv_window = a.window;
  const auto report = evaluate(m.artifact, corpus, opt, m.artifact_hash);
  const std::filesystem::path dir = a.out.empty() ? std::filesystem::path(a.artifact) : std::filesystem::path(a.out);
  std::filesystem::create_directories(dir);
  write_file((dir / "eval-report.json").string(), dump_json(report.to_json()));
  out << report.table();
  for (const auto& w : report.warnings) logger()->warn("{}", w);
  return kExitOk;
}

inline int cmd_infer(const InferArgs& a, std::ostream& out) {
  LoadedModel m = load_model(a.artifact);
  if (a.text.has_value() == a.file.has_value()) throw UsageError("give exactly one of --text or --file");
  const std::string text = a.text ? *a.text : read_file(*a.file);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw Error("input text is empty");
  if (a.sweeps) m.artifact.config.infer_sweeps = *a.sweeps;
  const std::string lang = a.lang.value_or(m.artifact.languages[0]);
  const auto enc = encode_text(m, text, lang);
  if (enc.ids.empty())
    throw EmptyDocumentError("no in-vocabulary tokens (" + std::to_string(enc.dropped) + " token(s) dropped)");
  const std::uint64_t seed = a.seed ? *a.seed : derive_seed(m.artifact.seed, fnv1a(text));
  const auto theta = infer_theta(m.artifact, enc.ids, seed, lang, a.slice);
  std::size_t best = 0;
  for (std::size_t k = 1; k < theta.size(); ++k)
    if (theta[k] > theta[best]) best = k;
  const int top = m.artifact.structure == Structure::tree ? m.artifact.tree.at(best).id : static_cast<int>(best);
  out << dump_json(json{{"theta", theta}, {"top_topic", top}}, -1) << '\n';
  return kExitOk;
}

inline int cmd_serve(const ServeArgs& a, std::ostream& out) {
  TopicService service(load_model(a.artifact));
  httplib::Server server;
  std::optional<std::filesystem::path> ui;
  if (a.ui_dir) ui = *a.ui_dir;
  mount_routes(server, service, ui);
  out << "serving " << a.artifact << " on http://" << a.host << ":" << a.port << std::endl;
  if (!server.listen(a.host, a.port)) throw Error("cannot listen on " + a.host + ":" + std::to_string(a.port));
  return kExitOk;
}

inline int cmd_gen_synthetic(const SyntheticArgs& a, std::ostream& out) {
  SyntheticOptions o;
  o.kind = parse_synthetic_kind(a.kind);
  o.num_docs = a.docs;
  o.vocab_size = a.vocab;
  o.num_topics = a.k;
  o.seed = a.seed;
  o.num_slices = a.slices;
  const auto s = generate_synthetic(o);
  write_synthetic(s, a.out);
  out << "generated kind=" << a.kind << " train_docs=" << s.corpus.train_docs.size()
      << " test_docs=" << s.corpus.test_docs.size() << " out=" << a.out << '\n';
  return kExitOk;
}

}  // namespace cli

/// Runs the command line; `args` excludes the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"topicforge: topic modeling toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  cli::PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Build a dataset directory from raw JSONL documents");
  p->add_option("--input", pre.input, "JSONL input: one {\"text\", label?, time?, pair?, lang?, split?} per line")
      ->required()
      ->check(CLI::ExistingFile);
  p->add_option("--output", pre.output, "Dataset directory to write")->required();
  p->add_option("--max-vocab", pre.max_vocab, "Keep at most this many words")->check(CLI::PositiveNumber);
  p->add_option("--min-df", pre.min_df, "Minimum document frequency")->check(CLI::PositiveNumber);
  p->add_option("--max-df-ratio", pre.max_df_ratio, "Maximum document frequency as a fraction of documents")
      ->check(CLI::Range(1e-9, 1.0));
  p->add_option("--min-token-len", pre.min_token_len, "Minimum token length in characters");
  p->add_option("--stopwords", pre.stopwords, "'english', 'none', or a file of whitespace-separated words");
  p->add_flag("--pretokenized", pre.pretokenized, "Split text on whitespace only; no filtering");
  p->add_option("--num-slices", pre.num_slices, "Number of time slices (default: max time + 1)")
      ->check(CLI::PositiveNumber);

  cli::TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a topic model on a dataset directory");
  t->add_option("--dataset", tr.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--model", tr.model, "Model kind")->required()->check(CLI::IsMember({"lda", "nmf", "hlda", "dtm", "pltm"}));
  t->add_option("--k", tr.k, "Number of topics");
  t->add_option("--depth", tr.depth, "Tree depth for hlda");
  t->add_option("--iters", tr.iters, "Sweeps or iterations (0: model default)");
  t->add_option("--seed", tr.seed, "Random seed");
  t->add_option("--out", tr.out, "Artifact directory to write")->required();
  t->add_option("--infer-sweeps", tr.infer_sweeps, "Sweeps for test-set fold-in")->check(CLI::PositiveNumber);
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
           {"--alpha", "alpha"}, {"--beta", "beta"}, {"--gamma", "gamma"}, {"--alpha-level", "alpha_level"},
           {"--kappa", "kappa"}, {"--eps", "eps"}}) {
    t->add_option_function<double>(
        flag, [&tr, key = key](double v) { tr.hyper[key] = v; }, "Hyperparameter " + key);
  }

  cli::EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate an artifact against a dataset");
  e->add_option("--artifact", ev.artifact, "Artifact directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--dataset", ev.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--metrics", ev.metrics,
                "Comma-separated: tc,cv,td,tu,clustering,classification,cnpmi,hierarchy,grouped (default: applicable)");
  e->add_option("--top-t", ev.top_t, "Top words for coherence and uniqueness (default 10)")->check(CLI::Range(2, 1000000));
  e->add_option("--td-top-t", ev.td_top_t, "Top words for diversity (default 25)")->check(CLI::PositiveNumber);
  e->add_option("--window", ev.window, "C_V sliding window size")->check(CLI::PositiveNumber);
  e->add_option("--out", ev.out, "Directory for eval-report.json (default: the artifact directory)");

  cli::InferArgs in;
  auto* i = app.add_subcommand("infer", "Infer the topic distribution of a document");
  i->add_option("--artifact", in.artifact, "Artifact directory")->required()->check(CLI::ExistingDirectory);
  i->add_option("--text", in.text, "Document text");
  i->add_option("--file", in.file, "File holding the document text")->check(CLI::ExistingFile);
  i->add_option("--sweeps", in.sweeps, "Fold-in sweeps (default: the artifact's)")->check(CLI::PositiveNumber);
  i->add_option("--seed", in.seed, "Sampler seed (default: derived from the artifact seed and the text)");
  i->add_option("--lang", in.lang, "Language of the text for cross-lingual models");
  i->add_option("--slice", in.slice, "Time slice for dynamic models (default: last)");

  cli::ServeArgs sv;
  auto* s = app.add_subcommand("serve", "Serve the JSON API (and optionally the web UI)");
  s->add_option("--artifact", sv.artifact, "Artifact directory")->required()->check(CLI::ExistingDirectory);
  s->add_option("--port", sv.port, "TCP port")->check(CLI::Range(1, 65535));
  s->add_option("--host", sv.host, "Bind address");
  s->add_option("--ui-dir", sv.ui_dir, "Static UI bundle served under /")->check(CLI::ExistingDirectory);

  cli::SyntheticArgs sy;
  auto* g = app.add_subcommand("gen-synthetic", "Sample a dataset from a known generative process");
  g->add_option("--kind", sy.kind, "lda, dtm, pltm or tree")->required()->check(CLI::IsMember({"lda", "dtm", "pltm", "tree"}));
  g->add_option("--docs", sy.docs, "Training documents (pairs for pltm)")->check(CLI::PositiveNumber);
  g->add_option("--vocab", sy.vocab, "Vocabulary size per language")->check(CLI::Range(2, 10000000));
  g->add_option("--k", sy.k, "Topics (depth-1 branches for tree)")->check(CLI::PositiveNumber);
  g->add_option("--seed", sy.seed, "Random seed");
  g->add_option("--slices", sy.slices, "Time slices for dtm")->check(CLI::PositiveNumber);
  g->add_option("--out", sy.out, "Dataset directory to write")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    const auto chosen = app.get_subcommands();
    out << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    if (p->parsed()) return cli::cmd_preprocess(pre, out);
    if (t->parsed()) return cli::cmd_train(tr, out);
    if (e->parsed()) return cli::cmd_eval(ev, out);
    if (i->parsed()) return cli::cmd_infer(in, out);
    if (s->parsed()) return cli::cmd_serve(sv, out);
    if (g->parsed()) return cli::cmd_gen_synthetic(sy, out);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace topicforge
