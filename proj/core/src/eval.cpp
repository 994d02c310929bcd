#include "spforge/eval.hpp"

#include <iomanip>
#include <random>
#include <sstream>

#include "spforge/parallel.hpp"

namespace spforge {

using nlohmann::json;

namespace {

constexpr const char* kMetricNames[] = {"rouge1", "rouge2", "rougeL", "rougeLsum"};

double f1_of(const RougeScores& s, std::size_t metric) {
  switch (metric) {
    case 0: return s.rouge1.f1;
    case 1: return s.rouge2.f1;
    case 2: return s.rougeL.f1;
    default: return s.rougeLsum.f1;
  }
}

std::vector<double> column(const SystemReport& r, std::size_t metric) {
  std::vector<double> out;
  out.reserve(r.per_example.size());
  for (const auto& s : r.per_example) out.push_back(f1_of(s, metric));
  return out;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

MetricMeans means_of(const std::vector<RougeScores>& scores) {
  MetricMeans m;
  if (scores.empty()) return m;
  for (const auto& s : scores) {
    m.rouge1 += s.rouge1.f1;
    m.rouge2 += s.rouge2.f1;
    m.rougeL += s.rougeL.f1;
    m.rougeLsum += s.rougeLsum.f1;
  }
  const double scale = 100.0 / static_cast<double>(scores.size());
  m.rouge1 *= scale;
  m.rouge2 *= scale;
  m.rougeL *= scale;
  m.rougeLsum *= scale;
  return m;
}

json means_to_json(const MetricMeans& m) {
  return json{{"rouge1", m.rouge1}, {"rouge2", m.rouge2}, {"rougeL", m.rougeL},
              {"rougeLsum", m.rougeLsum}};
}

json triple_to_json(const MetricTriple& t) {
  return json{{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
}

}  // namespace

double paired_bootstrap_p(const std::vector<double>& a, const std::vector<double>& b,
                          std::size_t resamples, std::uint64_t seed) {
  if (a.size() != b.size())
    throw LengthMismatch("paired samples differ in length: " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  if (a.empty() || resamples == 0) return 1.0;
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  std::mt19937_64 rng(seed);
  const auto n = diff.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t not_better = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += diff[pick(rng)];
    if (sum <= 0) ++not_better;
  }
  return static_cast<double>(not_better) / static_cast<double>(resamples);
}

EvalReport evaluate(const std::vector<SystemOutputs>& systems,
                    const std::vector<Summary>& references, const EvalOptions& options) {
  EvalReport report;
  for (const auto& sys : systems) {
    if (sys.summaries.size() != references.size())
      throw LengthMismatch("system '" + sys.name + "' has " + std::to_string(sys.summaries.size()) +
                           " outputs for " + std::to_string(references.size()) + " references");
    SystemReport r;
    r.name = sys.name;
    r.per_example.reserve(references.size());
    for (std::size_t i = 0; i < references.size(); ++i)
      r.per_example.push_back(score_summary(sys.summaries[i], references[i], options.tokenizer));
    r.means = means_of(r.per_example);
    report.systems.push_back(std::move(r));
  }
  if (!options.significance) return report;
  for (std::size_t i = 0; i < report.systems.size(); ++i) {
    for (std::size_t j = i + 1; j < report.systems.size(); ++j) {
      for (std::size_t m = 0; m < 4; ++m) {
        const auto a = column(report.systems[i], m);
        const auto b = column(report.systems[j], m);
        PairwiseTest t;
        t.a = report.systems[i].name;
        t.b = report.systems[j].name;
        t.metric = kMetricNames[m];
        t.mean_difference = 100.0 * (mean(a) - mean(b));
        t.p_value = paired_bootstrap_p(a, b, options.bootstrap_resamples, options.seed + m);
        report.tests.push_back(std::move(t));
      }
    }
  }
  return report;
}

json report_to_json(const EvalReport& report) {
  json systems = json::array();
  for (const auto& s : report.systems) {
    json examples = json::array();
    for (const auto& e : s.per_example)
      examples.push_back(json{{"rouge1", triple_to_json(e.rouge1)},
                              {"rouge2", triple_to_json(e.rouge2)},
                              {"rougeL", triple_to_json(e.rougeL)},
                              {"rougeLsum", triple_to_json(e.rougeLsum)}});
    systems.push_back(json{{"name", s.name}, {"means", means_to_json(s.means)},
                           {"per_example", examples}});
  }
  json tests = json::array();
  for (const auto& t : report.tests)
    tests.push_back(json{{"a", t.a}, {"b", t.b}, {"metric", t.metric},
                         {"mean_difference", t.mean_difference}, {"p_value", t.p_value}});
  return json{{"systems", systems}, {"tests", tests}};
}

std::string report_to_table(const EvalReport& report) {
  std::size_t width = 6;
  for (const auto& s : report.systems) width = std::max(width, s.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "System" << std::right
      << std::setw(8) << "R1" << std::setw(8) << "R2" << std::setw(8) << "RL" << std::setw(8)
      << "RLsum" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& s : report.systems) {
    out << std::left << std::setw(static_cast<int>(width)) << s.name << std::right
        << std::setw(8) << s.means.rouge1 << std::setw(8) << s.means.rouge2 << std::setw(8)
        << s.means.rougeL << std::setw(8) << s.means.rougeLsum << '\n';
  }
  if (!report.tests.empty()) {
    out << '\n';
    for (const auto& t : report.tests)
      out << t.a << " vs " << t.b << ' ' << t.metric << ": diff " << std::setprecision(2)
          << t.mean_difference << ", p = " << std::setprecision(4) << t.p_value << '\n';
  }
  return out.str();
}

std::vector<ProgramRecord> search_corpus(const std::vector<CorpusRecord>& corpus,
                                         const SearchConfig& config, ModuleBackend& backend,
                                         std::size_t threads) {
  check_config(config);
  for (const auto& r : corpus)
    if (!r.summary) throw InvalidArgument("record '" + r.id + "' has no summary to search against");
  std::vector<ProgramRecord> out(corpus.size());
  const auto snapshot = config_to_json(config);
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const auto& rec = corpus[i];
    auto result = sp_search(rec.document, *rec.summary, config, backend);
    out[i] = make_program_record(rec.id, std::move(result.program), &*rec.summary,
                                 result.seconds * 1000.0, snapshot, config.tokenizer);
  });
  return out;
}

std::vector<SweepRow> sweep(const std::vector<CorpusRecord>& corpus,
                            const std::vector<SearchConfig>& grid, ModuleBackend& backend,
                            std::size_t threads) {
  std::vector<SweepRow> rows;
  for (const auto& config : grid) {
    const auto records = search_corpus(corpus, config, backend, threads);
    SweepRow row;
    row.config = config;
    double ms = 0;
    for (const auto& r : records) {
      row.means.rouge1 += r.metrics->rouge1;
      row.means.rouge2 += r.metrics->rouge2;
      row.means.rougeL += r.metrics->rougeL;
      row.means.rougeLsum += r.metrics->rougeLsum;
      ms += r.timing_ms;
    }
    if (!records.empty()) {
      const double scale = 100.0 / static_cast<double>(records.size());
      row.means.rouge1 *= scale;
      row.means.rouge2 *= scale;
      row.means.rougeL *= scale;
      row.means.rougeLsum *= scale;
      row.seconds_per_sample = ms / 1000.0 / static_cast<double>(records.size());
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "k,queue_size,decode,height,rouge1,rouge2,rougeL,rougeLsum,seconds_per_sample\n";
  out << std::fixed;
  for (const auto& r : rows) {
    out << r.config.top_k << ',';
    if (r.config.queue_size == kUnboundedQueue)
      out << "inf";
    else
      out << r.config.queue_size;
    out << ",beam(" << r.config.generations << ")," << r.config.max_height << ','
        << std::setprecision(2) << r.means.rouge1 << ',' << r.means.rouge2 << ','
        << r.means.rougeL << ',' << r.means.rougeLsum << ',' << std::setprecision(4)
        << r.seconds_per_sample << '\n';
  }
  return out.str();
}

}  // namespace spforge
