#include "mhqg/cli.hpp"

#include "mhqg/backend.hpp"
#include "mhqg/corpus.hpp"
#include "mhqg/dataset.hpp"
#include "mhqg/error.hpp"
#include "mhqg/filtration.hpp"
#include "mhqg/graph.hpp"
#include "mhqg/qdmr.hpp"
#include "mhqg/stats.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace mhqg {

namespace {

struct RunConfig {
  std::string corpus;
  std::string pairs;
  std::vector<std::string> graphs;
  std::string backend = "stub";
  std::string backend_url;
  std::string config;
  std::string input;
  std::string out;
  long long top_n = -1;
  long long max_fanout = 8;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int timeout_ms = 30000;
  int retries = 2;
};

// Settings that outlive option parsing: the optional custom gazetteer and tagger.
struct Nlp {
  std::unique_ptr<Gazetteers> gazetteers;
  std::unique_ptr<RuleTagger> tagger;

  const EntityTagger& tag() const { return tagger ? static_cast<const EntityTagger&>(*tagger) : default_tagger(); }
  const Gazetteers& gaz() const { return gazetteers ? *gazetteers : default_gazetteers(); }
};

void apply_config_file(RunConfig& cfg, Nlp& nlp) {
  if (cfg.config.empty()) return;
  std::ifstream in(cfg.config);
  if (!in) throw ConfigError("cannot open config '" + cfg.config + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + cfg.config + "' is not valid JSON: " + e.what());
  }
  try {
    if (j.contains("nlp") && j.at("nlp").contains("gazetteer_dir")) {
      const std::string dir = j.at("nlp").at("gazetteer_dir").get<std::string>();
      if (!std::filesystem::is_directory(dir)) throw ConfigError("nlp.gazetteer_dir '" + dir + "' is not a directory");
      nlp.gazetteers = std::make_unique<Gazetteers>(Gazetteers::load(dir));
      nlp.tagger = std::make_unique<RuleTagger>(*nlp.gazetteers);
    }
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      if (b.contains("timeout_ms")) cfg.timeout_ms = b.at("timeout_ms").get<int>();
      if (b.contains("retries")) cfg.retries = b.at("retries").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

BackendDescriptor descriptor_of(const RunConfig& cfg) {
  BackendDescriptor d;
  d.seed = cfg.seed;
  d.timeout_ms = cfg.timeout_ms;
  d.retries = cfg.retries;
  if (cfg.backend == "stub") {
    d.kind = BackendKind::Stub;
  } else if (cfg.backend == "remote") {
    d.kind = BackendKind::Remote;
    std::string url = cfg.backend_url;
    if (url.empty()) {
      if (const char* env = std::getenv("MHQG_BACKEND_URL")) url = env;
    }
    if (url.empty()) throw ConfigError("--backend remote needs --backend-url or MHQG_BACKEND_URL");
    d.endpoint = url;
  } else {
    throw ConfigError("unknown backend '" + cfg.backend + "'");
  }
  d.validate();
  return d;
}

Corpus load_corpus(const RunConfig& cfg) {
  Corpus c;
  if (!cfg.corpus.empty()) c.tables = load_table_corpus(cfg.corpus);
  if (!cfg.pairs.empty()) c.pairs = load_text_pair_corpus(cfg.pairs);
  return c;
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_text_file(cfg.out, text);
  }
}

int cmd_ingest_check(const RunConfig& cfg, std::ostream& out) {
  if (cfg.corpus.empty() && cfg.pairs.empty()) throw ConfigError("ingest-check needs --corpus and/or --pairs");
  const Corpus c = load_corpus(cfg);
  std::size_t passages = 0;
  std::size_t rows = 0;
  for (const auto& t : c.tables) {
    passages += t.passages.size();
    rows += t.table.rows.size();
  }
  nlohmann::ordered_json j;
  j["tables"] = c.tables.size();
  j["table_rows"] = rows;
  j["linked_passages"] = passages;
  j["passage_pairs"] = c.pairs.size();
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg, const Nlp& nlp, std::ostream& out, std::ostream& err) {
  if (cfg.graphs.empty()) throw ConfigError("generate needs at least one --graph");
  if (cfg.max_fanout < 1) throw ConfigError("--max-fanout must be >= 1");
  if (cfg.corpus.empty() && cfg.pairs.empty()) throw ConfigError("generate needs --corpus and/or --pairs");
  std::vector<GraphKind> kinds;
  for (const auto& g : cfg.graphs) {
    auto k = graph_kind_from_string(g);
    if (!k) throw ConfigError("unknown graph kind '" + g + "'");
    kinds.push_back(*k);
  }
  const auto backend = make_backend(descriptor_of(cfg), nlp.tag());
  const Corpus corpus = load_corpus(cfg);
  GenerateOptions opts;
  opts.exec.max_fanout = static_cast<std::size_t>(cfg.max_fanout);
  opts.exec.seed = cfg.seed;
  opts.exec.tagger = &nlp.tag();
  opts.exec.gazetteers = &nlp.gaz();
  opts.threads = cfg.threads;
  opts.log = &err;
  ExecStats stats;
  const auto cands = generate_dataset(kinds, corpus, *backend, opts, &stats);
  emit(cfg, out, to_jsonl(cands));
  err << "generated " << cands.size() << " candidates from " << stats.branches << " branches (" << stats.dropped()
      << " dropped)\n";
  return kExitOk;
}

int cmd_filter(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.top_n < 0) throw ConfigError("filter needs --top-n >= 0");
  const auto backend = make_backend(descriptor_of(cfg));
  auto cands = read_jsonl(cfg.input);
  auto [kept, report] = filter_candidates(std::move(cands), *backend, static_cast<std::size_t>(cfg.top_n), cfg.threads);
  emit(cfg, out, to_jsonl(kept));
  const std::string report_text = report_to_json(report).dump(2) + "\n";
  if (cfg.out.empty()) {
    err << report_text;
  } else {
    write_text_file(cfg.out + ".report.json", report_text);
  }
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  const auto cands = read_jsonl(cfg.input);
  const DatasetStats s = compute_stats(cands);
  const std::string json_text = stats_to_json(s).dump(2) + "\n";
  if (cfg.out.empty()) {
    out << json_text;
  } else {
    write_text_file(cfg.out, json_text);
  }
  out << stats_histogram(s);
  return kExitOk;
}

int cmd_qdmr(const RunConfig& cfg, const Nlp& nlp, std::ostream& out, std::ostream& err) {
  if (cfg.corpus.empty()) throw ConfigError("qdmr-baseline needs --corpus");
  std::unique_ptr<Backend> remote;
  if (cfg.backend == "remote") remote = make_backend(descriptor_of(cfg));
  else descriptor_of(cfg);
  const auto tables = load_table_corpus(cfg.corpus);
  std::string text;
  for (const auto& ctx : tables) {
    for (GraphKind kind : {GraphKind::TableToText, GraphKind::TextToTable}) {
      std::vector<QdmrProgram> programs;
      try {
        programs = make_qdmr(ctx, kind, cfg.seed, nlp.tag());
      } catch (const InsufficientStructure& e) {
        err << "skipping table '" << ctx.table.id << "': " << e.what() << "\n";
        break;
      }
      for (const auto& p : programs) {
        nlohmann::ordered_json j;
        j["table"] = ctx.table.id;
        j["row"] = p.row;
        j["kind"] = to_string(kind);
        j["steps"] = p.steps;
        j["question"] = realize(p, remote.get());
        text += j.dump() + "\n";
      }
    }
  }
  emit(cfg, out, text);
  return kExitOk;
}

int cmd_export_graphs(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw ConfigError("export-graphs needs --out <dir>");
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw IoError("cannot create '" + cfg.out + "': " + ec.message());
  for (GraphKind k : kAllGraphKinds) {
    const auto path = std::filesystem::path(cfg.out) / (std::string(to_snake_case(k)) + ".json");
    write_text_file(path, graph_to_json(builtin(k)).dump(2) + "\n");
    out << path.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-hop question generation from tables and passages"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_corpus = [&](CLI::App* sub) {
    sub->add_option("--corpus", cfg.corpus, "Table corpus JSON");
    sub->add_option("--pairs", cfg.pairs, "Passage-pair corpus JSON");
  };
  auto add_backend = [&](CLI::App* sub) {
    sub->add_option("--backend", cfg.backend, "stub or remote")->check(CLI::IsMember({"stub", "remote"}));
    sub->add_option("--backend-url", cfg.backend_url, "Model host URL (default: $MHQG_BACKEND_URL)");
    sub->add_option("--seed", cfg.seed, "Seed for sampling and the stub backend");
    sub->add_option("--config", cfg.config, "JSON config file");
    sub->add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* ingest = app.add_subcommand("ingest-check", "Validate corpus files");
  add_corpus(ingest);

  auto* generate = app.add_subcommand("generate", "Run reasoning graphs over a corpus and write JSONL");
  add_corpus(generate);
  add_backend(generate);
  generate->add_option("--graph", cfg.graphs, "Graph kind, repeatable (e.g. table_to_text)");
  generate->add_option("--max-fanout", cfg.max_fanout, "Branches per context and graph");
  generate->add_option("--out", cfg.out, "Output JSONL (default: stdout)");

  auto* filter = app.add_subcommand("filter", "Score, dedup and keep the lowest-perplexity N");
  filter->add_option("input", cfg.input, "Input JSONL")->required();
  add_backend(filter);
  filter->add_option("--top-n", cfg.top_n, "Number of candidates to keep")->required();
  filter->add_option("--out", cfg.out, "Output JSONL; the report goes to <out>.report.json");

  auto* stats = app.add_subcommand("stats", "Per-kind and wh-type statistics");
  stats->add_option("input", cfg.input, "Input JSONL")->required();
  stats->add_option("--out", cfg.out, "Write stats JSON here");

  auto* qdmr = app.add_subcommand("qdmr-baseline", "Template QDMR programs and their realizations");
  add_corpus(qdmr);
  add_backend(qdmr);
  qdmr->add_option("--out", cfg.out, "Output JSONL (default: stdout)");

  auto* exporter = app.add_subcommand("export-graphs", "Write the six built-in graphs as JSON");
  exporter->add_option("--out", cfg.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    Nlp nlp;
    apply_config_file(cfg, nlp);
    if (ingest->parsed()) return cmd_ingest_check(cfg, out);
    if (generate->parsed()) return cmd_generate(cfg, nlp, out, err);
    if (filter->parsed()) return cmd_filter(cfg, out, err);
    if (stats->parsed()) return cmd_stats(cfg, out);
    if (qdmr->parsed()) return cmd_qdmr(cfg, nlp, out, err);
    if (exporter->parsed()) return cmd_export_graphs(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BackendUnavailable& e) {
    err << "backend unavailable: " << e.what() << "\n";
    return kExitBackend;
  } catch (const MalformedInput& e) {
    err << "corpus error: " << e.what() << "\n";
    return kExitCorpus;
  } catch (const DanglingLink& e) {
    err << "corpus error: " << e.what() << "\n";
    return kExitCorpus;
  } catch (const DuplicatePair& e) {
    err << "corpus error: " << e.what() << "\n";
    return kExitCorpus;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitCorpus;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace mhqg
