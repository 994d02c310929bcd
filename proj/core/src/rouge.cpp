#include "spforge/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "spforge/errors.hpp"

namespace spforge {

namespace {

// Port of Martin Porter's reference C implementation. Operates on b[0..k].
class PorterStemmer {
 public:
  explicit PorterStemmer(std::string word) : b_(std::move(word)) {}

  std::string run() {
    if (b_.size() <= 2) return b_;
    k_ = static_cast<int>(b_.size()) - 1;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, static_cast<std::size_t>(k_ + 1));
  }

 private:
  std::string b_;
  int k_ = 0;
  int j_ = 0;

  bool cons(int i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !cons(i - 1);
      default: return true;
    }
  }

  // Number of VC sequences in b[0..j].
  int m() const {
    int n = 0;
    int i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      i++;
    }
    i++;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        i++;
      }
      i++;
      n++;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        i++;
      }
      i++;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; i++)
      if (!cons(i)) return true;
    return false;
  }

  bool doublec(int j) const {
    if (j < 1) return false;
    if (b_[j] != b_[j - 1]) return false;
    return cons(j);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[i];
    return !(ch == 'w' || ch == 'x' || ch == 'y');
  }

  bool ends(std::string_view s) {
    const int length = static_cast<int>(s.size());
    if (length > k_ + 1) return false;
    if (b_.compare(static_cast<std::size_t>(k_ - length + 1), s.size(), s) != 0)
      return false;
    j_ = k_ - length;
    return true;
  }

  void setto(std::string_view s) {
    b_.replace(static_cast<std::size_t>(j_ + 1),
               static_cast<std::size_t>(k_ - j_), s);
    k_ = j_ + static_cast<int>(s.size());
    b_.resize(static_cast<std::size_t>(k_ + 1));
  }

  void r(std::string_view s) {
    if (m() > 0) setto(s);
  }

  void step1ab() {
    if (b_[k_] == 's') {
      if (ends("sses")) k_ -= 2;
      else if (ends("ies")) setto("i");
      else if (b_[k_ - 1] != 's') k_--;
    }
    if (ends("eed")) {
      if (m() > 0) k_--;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) setto("ate");
      else if (ends("bl")) setto("ble");
      else if (ends("iz")) setto("ize");
      else if (doublec(k_)) {
        k_--;
        const char ch = b_[k_];
        if (ch == 'l' || ch == 's' || ch == 'z') k_++;
      } else if (m() == 1 && cvc(k_)) {
        setto("e");
      }
    }
    b_.resize(static_cast<std::size_t>(k_ + 1));
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
  }

  void step2() {
    if (k_ < 1) return;
    switch (b_[k_ - 1]) {
      case 'a':
        if (ends("ational")) { r("ate"); break; }
        if (ends("tional")) { r("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { r("ence"); break; }
        if (ends("anci")) { r("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { r("ize"); break; }
        break;
      case 'l':
        if (ends("bli")) { r("ble"); break; }
        if (ends("alli")) { r("al"); break; }
        if (ends("entli")) { r("ent"); break; }
        if (ends("eli")) { r("e"); break; }
        if (ends("ousli")) { r("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { r("ize"); break; }
        if (ends("ation")) { r("ate"); break; }
        if (ends("ator")) { r("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { r("al"); break; }
        if (ends("iveness")) { r("ive"); break; }
        if (ends("fulness")) { r("ful"); break; }
        if (ends("ousness")) { r("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { r("al"); break; }
        if (ends("iviti")) { r("ive"); break; }
        if (ends("biliti")) { r("ble"); break; }
        break;
      case 'g':
        if (ends("logi")) { r("log"); break; }
        break;
      default: break;
    }
  }

  void step3() {
    switch (b_[k_]) {
      case 'e':
        if (ends("icate")) { r("ic"); break; }
        if (ends("ative")) { r(""); break; }
        if (ends("alize")) { r("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { r("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { r("ic"); break; }
        if (ends("ful")) { r(""); break; }
        break;
      case 's':
        if (ends("ness")) { r(""); break; }
        break;
      default: break;
    }
  }

  void step4() {
    if (k_ < 1) return;
    switch (b_[k_ - 1]) {
      case 'a': if (ends("al")) break; return;
      case 'c': if (ends("ance") || ends("ence")) break; return;
      case 'e': if (ends("er")) break; return;
      case 'i': if (ends("ic")) break; return;
      case 'l': if (ends("able") || ends("ible")) break; return;
      case 'n':
        if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) break;
        if (ends("ou")) break;
        return;
      case 's': if (ends("ism")) break; return;
      case 't': if (ends("ate") || ends("iti")) break; return;
      case 'u': if (ends("ous")) break; return;
      case 'v': if (ends("ive")) break; return;
      case 'z': if (ends("ize")) break; return;
      default: return;
    }
    if (m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (b_[k_] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) k_--;
    }
    if (b_[k_] == 'l' && doublec(k_) && m() > 1) k_--;
  }
};

std::vector<std::string> tokenize_all(const std::vector<std::string>& texts,
                                      const TokenizerConfig& config,
                                      std::vector<std::vector<std::string>>& out) {
  std::vector<std::string> flat;
  out.clear();
  for (const auto& t : texts) {
    out.push_back(tokenize(t, config));
    flat.insert(flat.end(), out.back().begin(), out.back().end());
  }
  return flat;
}

std::unordered_map<std::string, int> ngram_counts(TokenSpan tokens, int n) {
  std::unordered_map<std::string, int> counts;
  const auto size = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= size; ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j > 0) key.push_back('\x1f');
      key += tokens[static_cast<std::size_t>(i + j)];
    }
    ++counts[key];
  }
  return counts;
}

std::vector<std::vector<int>> lcs_table(TokenSpan a, TokenSpan b) {
  std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1
                                     : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t;
}

// Positions in `reference` belonging to one LCS with `candidate`.
std::vector<std::size_t> lcs_positions(TokenSpan reference, TokenSpan candidate) {
  const auto t = lcs_table(reference, candidate);
  std::vector<std::size_t> positions;
  std::size_t i = reference.size();
  std::size_t j = candidate.size();
  while (i > 0 && j > 0) {
    if (reference[i - 1] == candidate[j - 1]) {
      positions.push_back(i - 1);
      --i;
      --j;
    } else if (t[i][j - 1] > t[i - 1][j]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(positions.begin(), positions.end());
  return positions;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (config.use_stemmer && current.size() > 3) current = porter_stem(current);
    tokens.push_back(std::move(current));
    current.clear();
  };
  for (unsigned char c : text) {
    const bool keep = config.strip_non_alphanumeric ? std::isalnum(c) != 0
                                                    : std::isspace(c) == 0;
    if (!keep) {
      flush();
      continue;
    }
    current.push_back(config.lowercase ? static_cast<char>(std::tolower(c))
                                       : static_cast<char>(c));
  }
  flush();
  return tokens;
}

std::string porter_stem(std::string_view word) {
  return PorterStemmer(std::string(word)).run();
}

MetricTriple MetricTriple::from_counts(double hits, double candidate_total,
                                       double reference_total) {
  if (candidate_total <= 0.0 || reference_total <= 0.0) return {};
  return from_pr(hits / candidate_total, hits / reference_total);
}

MetricTriple MetricTriple::from_pr(double precision, double recall) {
  MetricTriple m;
  m.precision = precision;
  m.recall = recall;
  m.f1 = precision + recall > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
  return m;
}

MetricTriple rouge_n(TokenSpan candidate, TokenSpan reference, int n) {
  if (n < 1) throw InvalidArgument("rouge_n requires n >= 1, got " + std::to_string(n));
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  int cand_total = 0;
  int ref_total = 0;
  int hits = 0;
  for (const auto& [gram, count] : cand) cand_total += count;
  for (const auto& [gram, count] : ref) {
    ref_total += count;
    if (auto it = cand.find(gram); it != cand.end()) hits += std::min(count, it->second);
  }
  return MetricTriple::from_counts(hits, cand_total, ref_total);
}

MetricTriple rouge_n(std::string_view candidate, std::string_view reference,
                     int n, const TokenizerConfig& config) {
  const auto c = tokenize(candidate, config);
  const auto r = tokenize(reference, config);
  return rouge_n(c, r, n);
}

MetricTriple rouge_l(TokenSpan candidate, TokenSpan reference) {
  if (candidate.empty() || reference.empty()) return {};
  const auto t = lcs_table(reference, candidate);
  const double lcs = t[reference.size()][candidate.size()];
  return MetricTriple::from_counts(lcs, static_cast<double>(candidate.size()),
                                   static_cast<double>(reference.size()));
}

MetricTriple rouge_l(std::string_view candidate, std::string_view reference,
                     const TokenizerConfig& config) {
  const auto c = tokenize(candidate, config);
  const auto r = tokenize(reference, config);
  return rouge_l(c, r);
}

MetricTriple rouge_lsum(const std::vector<std::string>& candidate_sentences,
                        const std::vector<std::string>& reference_sentences,
                        const TokenizerConfig& config) {
  std::vector<std::vector<std::string>> cand;
  std::vector<std::vector<std::string>> ref;
  const auto cand_flat = tokenize_all(candidate_sentences, config, cand);
  const auto ref_flat = tokenize_all(reference_sentences, config, ref);
  if (cand_flat.empty() || ref_flat.empty()) return {};

  std::map<std::string, int> cand_counts;
  std::map<std::string, int> ref_counts;
  for (const auto& t : cand_flat) ++cand_counts[t];
  for (const auto& t : ref_flat) ++ref_counts[t];

  int hits = 0;
  for (const auto& ref_sentence : ref) {
    std::set<std::size_t> union_positions;
    for (const auto& cand_sentence : cand) {
      for (auto p : lcs_positions(ref_sentence, cand_sentence)) union_positions.insert(p);
    }
    for (auto p : union_positions) {
      const auto& token = ref_sentence[p];
      auto& rc = ref_counts[token];
      auto& cc = cand_counts[token];
      if (rc > 0 && cc > 0) {
        ++hits;
        --rc;
        --cc;
      }
    }
  }
  return MetricTriple::from_counts(hits, static_cast<double>(cand_flat.size()),
                                   static_cast<double>(ref_flat.size()));
}

double unigram_overlap_fraction(std::string_view sentence,
                                std::string_view summary,
                                const TokenizerConfig& config) {
  const auto s = tokenize(sentence, config);
  if (s.empty()) return 0.0;
  const auto sum = tokenize(summary, config);
  const std::set<std::string> sentence_types(s.begin(), s.end());
  const std::set<std::string> summary_types(sum.begin(), sum.end());
  std::size_t shared = 0;
  for (const auto& t : sentence_types) shared += summary_types.count(t);
  return static_cast<double>(shared) / static_cast<double>(sentence_types.size());
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::rouge1: return "rouge-1";
    case Metric::rouge2: return "rouge-2";
    case Metric::rougeL: return "rouge-l";
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "rouge-1" || lower == "rouge1" || lower == "r1") return Metric::rouge1;
  if (lower == "rouge-2" || lower == "rouge2" || lower == "r2") return Metric::rouge2;
  if (lower == "rouge-l" || lower == "rougel" || lower == "rl") return Metric::rougeL;
  return std::nullopt;
}

TargetScorer::TargetScorer(std::string_view target, Metric metric,
                           TokenizerConfig config)
    : metric_(metric), config_(config), target_tokens_(tokenize(target, config)) {}

MetricTriple TargetScorer::triple(std::string_view candidate) const {
  const auto tokens = tokenize(candidate, config_);
  switch (metric_) {
    case Metric::rouge1: return rouge_n(tokens, target_tokens_, 1);
    case Metric::rouge2: return rouge_n(tokens, target_tokens_, 2);
    case Metric::rougeL: return rouge_l(tokens, target_tokens_);
  }
  return {};
}

double TargetScorer::operator()(std::string_view candidate) const {
  return triple(candidate).f1;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

RougeScores score_summary(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference,
                          const TokenizerConfig& config) {
  const auto c = tokenize(join_sentences(candidate), config);
  const auto r = tokenize(join_sentences(reference), config);
  RougeScores s;
  s.rouge1 = rouge_n(c, r, 1);
  s.rouge2 = rouge_n(c, r, 2);
  s.rougeL = rouge_l(c, r);
  s.rougeLsum = rouge_lsum(candidate, reference, config);
  return s;
}

}  // namespace spforge
