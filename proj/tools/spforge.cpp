// spforge: search, execute, score and serve summarization programs.
//
// Exit codes: 0 success, 1 input error, 2 backend error.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spforge/backend.hpp"
#include "spforge/baselines.hpp"
#include "spforge/corpus_io.hpp"
#include "spforge/dsl.hpp"
#include "spforge/eval.hpp"
#include "spforge/executor.hpp"
#include "spforge/parallel.hpp"
#include "spforge/search.hpp"
#include "spforge/service.hpp"

using namespace spforge;
using nlohmann::json;

namespace {

struct BackendOptions {
  std::string kind = "reference";
  std::string remote_url;
  int timeout_ms = 30000;
  std::string ablate;
};

struct SearchOptions {
  std::size_t k = 4;
  std::string queue_size = "20";
  int height = 2;
  std::size_t gens = 5;
  std::string metric = "rouge-l";
};

void add_backend_flags(CLI::App* cmd, BackendOptions& b) {
  cmd->add_option("--backend", b.kind, "reference | remote")
      ->check(CLI::IsMember({"reference", "remote"}));
  cmd->add_option("--remote-url", b.remote_url, "inference sidecar, e.g. http://127.0.0.1:8080");
  cmd->add_option("--timeout-ms", b.timeout_ms, "remote request timeout")->check(CLI::PositiveNumber);
  cmd->add_option("--ablate", b.ablate, "disable one module kind")
      ->check(CLI::IsMember({"fusion", "compression", "paraphrase"}));
}

void add_search_flags(CLI::App* cmd, SearchOptions& s) {
  cmd->add_option("--k", s.k, "leaf pool size")->check(CLI::PositiveNumber);
  cmd->add_option("--queue-size", s.queue_size, "queue bound, or 'inf'");
  cmd->add_option("--height", s.height, "maximum tree height")->check(CLI::NonNegativeNumber);
  cmd->add_option("--gens", s.gens, "candidates per module call")->check(CLI::PositiveNumber);
  cmd->add_option("--metric", s.metric, "rouge-1 | rouge-2 | rouge-l");
}

std::shared_ptr<ModuleBackend> make_backend(const BackendOptions& b) {
  std::shared_ptr<ModuleBackend> backend;
  if (b.kind == "remote") {
    if (b.remote_url.empty()) throw InvalidArgument("--backend remote needs --remote-url");
    RemoteBackendConfig rc;
    rc.base_url = b.remote_url;
    rc.timeout = std::chrono::milliseconds(b.timeout_ms);
    backend = std::make_shared<RemoteBackend>(rc);
  } else {
    backend = std::make_shared<ReferenceBackend>();
  }
  if (!b.ablate.empty()) backend = std::make_shared<AblatedBackend>(backend, *parse_module_kind(b.ablate));
  return backend;
}

std::size_t parse_queue(const std::string& s) {
  if (s == "inf" || s == "unbounded") return kUnboundedQueue;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("bad --queue-size '" + s + "'");
  }
}

SearchConfig make_search_config(const SearchOptions& s) {
  SearchConfig c;
  c.top_k = s.k;
  c.queue_size = parse_queue(s.queue_size);
  c.max_height = s.height;
  c.generations = s.gens;
  const auto m = parse_metric(s.metric);
  if (!m) throw InvalidArgument("unknown metric '" + s.metric + "'");
  c.metric = *m;
  check_config(c);
  return c;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

std::vector<CorpusRecord> read_corpus(const std::string& path) {
  if (path == "-") return load_corpus(std::cin);
  auto in = open_in(path);
  return load_corpus(in);
}

std::vector<ProgramRecord> read_programs(const std::string& path) {
  auto in = open_in(path);
  return load_programs(in);
}

std::vector<json> read_jsonl(const std::string& path) {
  auto in = open_in(path);
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw MalformedLine(n, e.what());
    }
  }
  return out;
}

// Writes to --out, or stdout when empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw InputError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::size_t> fallback_for(const CorpusRecord& r, std::size_t k) {
  if (r.extracted) return *r.extracted;
  if (r.summary) return select_top_k(r.document, *r.summary, k);
  std::vector<std::size_t> lead;
  for (std::size_t i = 0; i < std::min<std::size_t>(k, r.document.size()); ++i) lead.push_back(i);
  return lead;
}

// ------------------------------------------------------------- commands

int cmd_search(const std::string& corpus_path, const std::string& out_path, const SearchOptions& so,
               const BackendOptions& bo, std::size_t threads, const std::string& trace_path) {
  const auto corpus = read_corpus(corpus_path);
  const auto config = make_search_config(so);
  auto backend = make_backend(bo);
  for (const auto& r : corpus)
    if (!r.summary) throw InvalidArgument("record '" + r.id + "' has no summary to search against");

  std::vector<ProgramRecord> records(corpus.size());
  std::vector<json> traces(corpus.size());
  const auto snapshot = config_to_json(config);
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const auto& rec = corpus[i];
    auto result = sp_search(rec.document, *rec.summary, config, *backend);
    if (!trace_path.empty()) {
      json t = json::array();
      for (const auto& tr : result.traces) t.push_back(trace_to_json(tr));
      traces[i] = json{{"id", rec.id}, {"traces", t}};
    }
    records[i] = make_program_record(rec.id, std::move(result.program), &*rec.summary,
                                     result.seconds * 1000.0, snapshot, config.tokenizer);
  });

  Output out(out_path);
  save_programs(out.stream(), records);
  if (!trace_path.empty()) {
    std::ofstream t(trace_path);
    if (!t) throw InputError("cannot write " + trace_path);
    for (const auto& j : traces) t << j.dump() << '\n';
  }
  std::vector<SystemOutputs> systems(2);
  systems[0].name = "SP-Search";
  systems[1].name = "Leaves";
  std::vector<Summary> refs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    systems[0].summaries.push_back(records[i].summary);
    systems[1].summaries.push_back(leaves_baseline(records[i].program));
    refs.push_back(corpus[i].summary->sentences);
  }
  EvalOptions eo;
  eo.significance = false;
  std::cerr << report_to_table(evaluate(systems, refs, eo));
  return 0;
}

int cmd_execute(const std::string& corpus_path, const std::string& out_path, const std::string& dsl,
                const std::string& programs_path, const std::string& selection, std::size_t gens,
                std::size_t k, const BackendOptions& bo, std::size_t threads) {
  const auto corpus = read_corpus(corpus_path);
  auto backend = make_backend(bo);
  if (dsl.empty() == programs_path.empty()) throw InvalidArgument("give exactly one of --dsl or --programs");

  ExecutionConfig ec;
  ec.generations = gens;
  if (selection == "best_vs_target") ec.selection = CandidateSelection::best_vs_target;

  // id -> candidate programs, most preferred first
  std::map<std::string, std::vector<std::string>> candidates;
  if (!programs_path.empty()) {
    for (const auto& j : read_jsonl(programs_path)) {
      const auto id = j.at("id").get<std::string>();
      if (j.contains("candidates"))
        candidates[id] = j.at("candidates").get<std::vector<std::string>>();
      else
        candidates[id] = {j.at("dsl").get<std::string>()};
    }
  }

  std::vector<json> lines(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const auto& rec = corpus[i];
    std::vector<std::string> progs;
    if (!dsl.empty()) {
      progs = {dsl};
    } else if (auto it = candidates.find(rec.id); it != candidates.end()) {
      progs = it->second;
    }
    json line{{"id", rec.id}};
    if (ec.selection == CandidateSelection::best_vs_target) {
      if (progs.empty()) throw InvalidArgument("no program for '" + rec.id + "'");
      if (!rec.summary) throw InvalidArgument("best_vs_target needs a summary for '" + rec.id + "'");
      auto result = execute_skeleton(parse(progs.front(), rec.document.size()), rec.document, *backend, ec,
                                     &*rec.summary);
      line["dsl"] = serialize(result.program);
      line["summary"] = result.summary;
      line["chosen"] = 0;
      line["nodes"] = json::array();
      for (const auto& t : result.program.trees) line["nodes"].push_back(node_to_json(*t.root));
    } else {
      auto result = execute_first_wellformed(progs, rec.document, *backend, fallback_for(rec, k), ec);
      line["summary"] = result.summary;
      line["chosen"] = result.chosen ? json(*result.chosen) : json(nullptr);
      line["dsl"] = result.execution ? json(serialize(result.execution->program)) : json(nullptr);
      if (result.execution) {
        line["nodes"] = json::array();
        for (const auto& t : result.execution->program.trees)
          line["nodes"].push_back(node_to_json(*t.root));
      }
    }
    if (rec.summary)
      line["metrics"] = [&] {
        const auto m = metrics_from(score_summary(line["summary"].get<std::vector<std::string>>(),
                                                  rec.summary->sentences));
        return json{{"rouge1", m.rouge1}, {"rouge2", m.rouge2}, {"rougeL", m.rougeL},
                    {"rougeLsum", m.rougeLsum}};
      }();
    lines[i] = std::move(line);
  });
  Output out(out_path);
  for (const auto& l : lines) out.stream() << l.dump() << '\n';
  return 0;
}

int cmd_baseline(const std::string& corpus_path, const std::string& out_path, const std::string& kind,
                 const std::string& programs_path, std::size_t k, std::uint64_t seed, std::size_t gens,
                 const BackendOptions& bo) {
  const auto corpus = read_corpus(corpus_path);
  Output out(out_path);
  if (kind == "leaves") {
    if (programs_path.empty()) throw InvalidArgument("leaves baseline needs --programs");
    for (const auto& p : read_programs(programs_path))
      out.stream() << json{{"id", p.id}, {"summary", leaves_baseline(p.program)}}.dump() << '\n';
    return 0;
  }
  if (kind == "topk") {
    for (const auto& r : corpus) {
      if (!r.summary) throw InvalidArgument("topk baseline needs a summary for '" + r.id + "'");
      out.stream() << json{{"id", r.id}, {"summary", topk_baseline(r.document, *r.summary, k)}}.dump() << '\n';
    }
    return 0;
  }
  // random-joint: leaves from the whole document; random-eab: from "extracted".
  auto dist = shipped_structure_distribution();
  if (!programs_path.empty()) {
    std::vector<SummarizationProgram> programs;
    for (auto& p : read_programs(programs_path)) programs.push_back(std::move(p.program));
    dist = distribution_from_programs(programs);
  }
  auto backend = make_backend(bo);
  ExecutionConfig ec;
  ec.generations = gens;
  for (const auto& r : corpus) {
    std::vector<std::size_t> pool;
    if (kind == "random-eab") {
      if (!r.extracted) throw InvalidArgument("record '" + r.id + "' has no extracted sentences");
      pool = *r.extracted;
    } else {
      for (std::size_t i = 0; i < r.document.size(); ++i) pool.push_back(i);
    }
    const auto skeleton = random_program(r.document, pool, dist, derive_seed(seed, r.id));
    const auto result = execute_skeleton(skeleton, r.document, *backend, ec);
    out.stream() << json{{"id", r.id}, {"dsl", serialize(skeleton)}, {"summary", result.summary}}.dump()
                 << '\n';
  }
  return 0;
}

int cmd_eval(const std::string& corpus_path, const std::string& out_path,
             const std::vector<std::string>& system_specs, std::uint64_t seed, std::size_t resamples) {
  const auto corpus = read_corpus(corpus_path);
  std::vector<Summary> refs;
  for (const auto& r : corpus) {
    if (!r.summary) throw InvalidArgument("record '" + r.id + "' has no reference summary");
    refs.push_back(r.summary->sentences);
  }
  std::vector<SystemOutputs> systems;
  for (const auto& spec : system_specs) {
    const auto eq = spec.find('=');
    SystemOutputs sys;
    sys.name = eq == std::string::npos ? spec : spec.substr(0, eq);
    const auto path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    std::map<std::string, Summary> by_id;
    for (const auto& j : read_jsonl(path))
      by_id[j.at("id").get<std::string>()] = j.at("summary").get<Summary>();
    if (by_id.size() != corpus.size())
      throw LengthMismatch(sys.name + ": " + std::to_string(by_id.size()) + " outputs for " +
                           std::to_string(corpus.size()) + " records");
    for (const auto& r : corpus) {
      auto it = by_id.find(r.id);
      if (it == by_id.end()) throw LengthMismatch(sys.name + " has no output for '" + r.id + "'");
      sys.summaries.push_back(it->second);
    }
    systems.push_back(std::move(sys));
  }
  EvalOptions eo;
  eo.seed = seed;
  eo.bootstrap_resamples = resamples;
  const auto report = evaluate(systems, refs, eo);
  std::cout << report_to_table(report);
  if (!out_path.empty()) Output(out_path).stream() << report_to_json(report).dump(2) << '\n';
  return 0;
}

int cmd_stats(const std::string& programs_path, const std::string& out_path) {
  std::vector<SummarizationProgram> programs;
  for (auto& p : read_programs(programs_path)) programs.push_back(std::move(p.program));
  const auto stats = structure_stats(programs);
  std::cout << stats_to_table(stats);
  if (!out_path.empty()) Output(out_path).stream() << stats_to_json(stats).dump(2) << '\n';
  return 0;
}

template <typename T>
std::vector<T> or_default(std::vector<T> v, T fallback) {
  if (v.empty()) v.push_back(fallback);
  return v;
}

int cmd_sweep(const std::string& corpus_path, const std::string& out_path, const std::vector<std::size_t>& ks,
              const std::vector<std::string>& queues, const std::vector<int>& heights,
              const std::vector<std::size_t>& gens, const BackendOptions& bo, std::size_t threads) {
  const auto corpus = read_corpus(corpus_path);
  auto backend = make_backend(bo);
  std::vector<SearchConfig> grid;
  for (auto k : or_default(ks, std::size_t{4}))
    for (const auto& q : or_default(queues, std::string("20")))
      for (auto g : or_default(gens, std::size_t{5}))
        for (auto h : or_default(heights, 2)) {
          SearchConfig c;
          c.top_k = k;
          c.queue_size = parse_queue(q);
          c.generations = g;
          c.max_height = h;
          check_config(c);
          grid.push_back(c);
        }
  const auto rows = sweep(corpus, grid, *backend, threads);
  Output(out_path).stream() << sweep_to_csv(rows);
  return 0;
}

int cmd_validate(const std::string& dsl, std::size_t doc_size, const std::string& programs_path) {
  if (!dsl.empty()) {
    const auto diags = check_wellformed(dsl, doc_size);
    for (const auto& d : diags)
      std::cout << to_string(d.code) << " at " << d.position << ": " << d.message << '\n';
    if (diags.empty()) std::cout << "ok\n";
    return diags.empty() ? 0 : 1;
  }
  if (programs_path.empty()) throw InvalidArgument("give --dsl or --programs");
  const auto records = read_programs(programs_path);
  std::cout << records.size() << " program(s) ok\n";
  return 0;
}

std::atomic<HttpServer*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(int port, const std::string& data_dir, const SearchOptions& so, const BackendOptions& bo,
              std::size_t threads) {
  ServiceConfig sc;
  sc.search = make_search_config(so);
  sc.execution.generations = so.gens;
  sc.data_dir = data_dir;
  sc.max_concurrent_searches = threads;
  Service service(make_backend(bo), sc);
  HttpServer server(service, "0.0.0.0", port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on port " << server.port() << '\n';
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Summarization programs: search, execute, evaluate, serve"};
  app.require_subcommand(1);

  std::string corpus, out, programs, dsl, kind = "leaves", selection = "top1", data_dir = "sessions", trace;
  std::vector<std::string> system_specs;
  std::size_t parallel = 1, doc_size = 0, resamples = 10000;
  std::uint64_t seed = 0;
  int port = 8080;
  SearchOptions so;
  BackendOptions bo;
  std::vector<std::size_t> sweep_k, sweep_gens;
  std::vector<std::string> sweep_q;
  std::vector<int> sweep_h;

  auto* search = app.add_subcommand("search", "find a program for every corpus record");
  search->add_option("--corpus", corpus, "corpus JSONL ('-' for stdin)")->required();
  search->add_option("--out", out, "program records JSONL (default stdout)");
  search->add_option("--trace", trace, "write per-record search traces to this file");
  search->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
  search->add_option("--seed", seed, "unused; search is deterministic");
  add_search_flags(search, so);
  add_backend_flags(search, bo);

  auto* execute = app.add_subcommand("execute", "run programs over documents");
  execute->add_option("--corpus", corpus)->required();
  execute->add_option("--out", out);
  execute->add_option("--dsl", dsl, "one program for every record");
  execute->add_option("--programs", programs, "JSONL of {id, dsl} or {id, candidates}");
  execute->add_option("--selection", selection)->check(CLI::IsMember({"top1", "best_vs_target"}));
  execute->add_option("--gens", so.gens)->check(CLI::PositiveNumber);
  execute->add_option("--k", so.k, "fallback size when no program is well-formed");
  execute->add_option("--parallel", parallel)->check(CLI::PositiveNumber);
  add_backend_flags(execute, bo);

  auto* baseline = app.add_subcommand("baseline", "extractive and random-program baselines");
  baseline->add_option("--corpus", corpus)->required();
  baseline->add_option("--out", out);
  baseline->add_option("--kind", kind)->check(CLI::IsMember({"leaves", "topk", "random-joint", "random-eab"}));
  baseline->add_option("--programs", programs, "searched programs (leaves; structure source for random)");
  baseline->add_option("--k", so.k)->check(CLI::PositiveNumber);
  baseline->add_option("--seed", seed);
  baseline->add_option("--gens", so.gens)->check(CLI::PositiveNumber);
  add_backend_flags(baseline, bo);

  auto* eval = app.add_subcommand("eval", "score systems against corpus summaries");
  eval->add_option("--corpus", corpus)->required();
  eval->add_option("--system", system_specs, "name=outputs.jsonl (repeatable)")->required();
  eval->add_option("--out", out, "JSON report");
  eval->add_option("--seed", seed);
  eval->add_option("--resamples", resamples);

  auto* stats = app.add_subcommand("stats", "structure statistics of program records");
  stats->add_option("--programs", programs)->required();
  stats->add_option("--out", out, "JSON output");

  auto* sweep_cmd = app.add_subcommand("sweep", "search over a grid of configurations");
  sweep_cmd->add_option("--corpus", corpus)->required();
  sweep_cmd->add_option("--out", out, "CSV (default stdout)");
  sweep_cmd->add_option("--k", sweep_k)->delimiter(',');
  sweep_cmd->add_option("--queue-size", sweep_q)->delimiter(',');
  sweep_cmd->add_option("--height", sweep_h)->delimiter(',');
  sweep_cmd->add_option("--gens", sweep_gens)->delimiter(',');
  sweep_cmd->add_option("--parallel", parallel)->check(CLI::PositiveNumber);
  add_backend_flags(sweep_cmd, bo);

  auto* validate = app.add_subcommand("validate", "check a program string or a program file");
  validate->add_option("--dsl", dsl);
  validate->add_option("--doc-size", doc_size);
  validate->add_option("--programs", programs);

  auto* serve = app.add_subcommand("serve", "HTTP JSON service");
  serve->add_option("--port", port);
  serve->add_option("--data-dir", data_dir, "session logs");
  serve->add_option("--parallel", parallel, "concurrent searches")->check(CLI::PositiveNumber);
  add_search_flags(serve, so);
  add_backend_flags(serve, bo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*search) return cmd_search(corpus, out, so, bo, parallel, trace);
    if (*execute) return cmd_execute(corpus, out, dsl, programs, selection, so.gens, so.k, bo, parallel);
    if (*baseline) return cmd_baseline(corpus, out, kind, programs, so.k, seed, so.gens, bo);
    if (*eval) return cmd_eval(corpus, out, system_specs, seed, resamples);
    if (*stats) return cmd_stats(programs, out);
    if (*sweep_cmd) return cmd_sweep(corpus, out, sweep_k, sweep_q, sweep_h, sweep_gens, bo, parallel);
    if (*validate) return cmd_validate(dsl, doc_size, programs);
    if (*serve) return cmd_serve(port, data_dir, so, bo, parallel);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
