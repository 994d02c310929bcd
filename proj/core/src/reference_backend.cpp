#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <string_view>

#include "spforge/backend.hpp"
#include "spforge/rouge.hpp"

namespace spforge {

namespace {

constexpr std::array<std::string_view, 48> kStopwords = {
    "a",    "an",   "the",  "and",  "or",   "but",  "of",    "to",
    "in",   "on",   "at",   "by",   "for",  "with", "from",  "as",
    "is",   "are",  "was",  "were", "be",   "been", "has",   "have",
    "had",  "it",   "its",  "he",   "she",  "they", "his",   "her",
    "their", "this", "that", "these", "those", "who", "which", "not",
    "will", "would", "after", "before", "into", "over", "than", "then"};

// Undirected synonym pairs.
constexpr std::array<std::pair<std::string_view, std::string_view>, 40> kSynonyms = {{
    {"said", "stated"},        {"big", "large"},          {"buy", "purchase"},
    {"bought", "purchased"},   {"start", "begin"},        {"started", "began"},
    {"help", "assist"},        {"helped", "assisted"},    {"show", "reveal"},
    {"showed", "revealed"},    {"killed", "slain"},       {"police", "officers"},
    {"car", "vehicle"},        {"house", "home"},         {"children", "kids"},
    {"people", "residents"},   {"city", "town"},          {"quickly", "rapidly"},
    {"small", "little"},       {"attack", "assault"},     {"died", "perished"},
    {"arrested", "detained"},  {"found", "discovered"},   {"told", "informed"},
    {"also", "additionally"},  {"many", "numerous"},      {"hospital", "clinic"},
    {"government", "authorities"}, {"officials", "spokesmen"}, {"won", "secured"},
    {"game", "match"},         {"team", "squad"},         {"country", "nation"},
    {"money", "funds"},        {"job", "position"},       {"wanted", "sought"},
    {"announced", "declared"}, {"near", "close"},         {"road", "street"},
    {"shot", "fired"},
}};

bool is_stopword(std::string_view w) {
  return std::find(kStopwords.begin(), kStopwords.end(), w) != kStopwords.end();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> content_types(std::string_view text) {
  std::set<std::string> out;
  for (auto& t : tokenize(text))
    if (!is_stopword(t)) out.insert(std::move(t));
  return out;
}

// A sentence split into whitespace words with its terminal punctuation
// ('.', '!' or '?') held apart.
struct Words {
  std::vector<std::string> words;
  std::string terminal;

  static Words split(std::string_view text) {
    Words w;
    std::string current;
    for (char c : text) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!current.empty()) w.words.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!current.empty()) w.words.push_back(std::move(current));
    if (!w.words.empty()) {
      auto& last = w.words.back();
      while (!last.empty() && (last.back() == '.' || last.back() == '!' || last.back() == '?')) {
        w.terminal.insert(w.terminal.begin(), last.back());
        last.pop_back();
      }
      if (last.empty()) w.words.pop_back();
    }
    return w;
  }
};

std::string strip_trailing_comma(std::string word) {
  while (!word.empty() && (word.back() == ',' || word.back() == ';')) word.pop_back();
  return word;
}

std::string render(std::vector<std::string> words, const std::string& terminal) {
  if (words.empty()) return {};
  words.back() = strip_trailing_comma(words.back());
  std::string out;
  for (const auto& w : words) {
    if (w.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out.empty() ? out : out + terminal;
}

bool ends_with_comma(const std::string& word) {
  return !word.empty() && word.back() == ',';
}

// Keeps candidates that are new, non-blank and pass `accept`, up to `limit`.
class CandidateCollector {
 public:
  CandidateCollector(std::size_t limit, std::string input)
      : limit_(limit), input_(normalize_whitespace(input)) {}

  template <typename Accept>
  void offer(const std::string& text, Accept&& accept) {
    if (full()) return;
    auto norm = normalize_whitespace(text);
    if (norm.empty() || norm == input_ || seen_.count(norm) > 0) return;
    if (!accept(norm)) return;
    seen_.insert(norm);
    out_.candidates.push_back(std::move(norm));
  }

  bool full() const { return out_.candidates.size() >= limit_; }
  CandidateSet take() { return std::move(out_); }

 private:
  std::size_t limit_;
  std::string input_;
  std::set<std::string> seen_;
  CandidateSet out_;
};

CandidateSet compress(const std::string& input, std::size_t limit) {
  const auto sentence = Words::split(input);
  const auto& w = sentence.words;
  const auto& term = sentence.terminal;
  const auto n = w.size();
  const auto input_tokens = tokenize(input).size();
  CandidateCollector out(limit, input);
  auto shorter = [&](const std::string& c) { return tokenize(c).size() < input_tokens; };

  // (a) final comma-delimited clause
  for (std::size_t i = n; i-- > 1;) {
    if (ends_with_comma(w[i - 1])) {
      out.offer(render({w.begin(), w.begin() + static_cast<long>(i)}, term), shorter);
      break;
    }
  }
  // (b) parenthesized spans
  {
    std::vector<std::string> kept;
    bool inside = false;
    bool removed = false;
    for (const auto& word : w) {
      if (!inside && !word.empty() && word.front() == '(') {
        inside = true;
        removed = true;
      }
      if (!inside) kept.push_back(word);
      if (inside && !word.empty() && word.back() == ')') inside = false;
      else if (inside && word.find(')') != std::string::npos) inside = false;
    }
    if (removed) out.offer(render(kept, term), shorter);
  }
  // (c) trailing spans, shortest first, keeping at least two words
  for (std::size_t drop = 1; n >= 2 && drop + 2 <= n; ++drop) {
    out.offer(render({w.begin(), w.end() - static_cast<long>(drop)}, term), shorter);
  }
  // (d) single interior words
  for (std::size_t i = 1; i + 1 < n; ++i) {
    std::vector<std::string> kept(w.begin(), w.end());
    kept.erase(kept.begin() + static_cast<long>(i));
    out.offer(render(kept, term), shorter);
  }
  if (n == 2) out.offer(render({w.front()}, term), shorter);

  auto set = out.take();
  if (set.candidates.empty()) throw EmptyGeneration("nothing left to compress in: " + input);
  return set;
}

std::string match_case(std::string_view original, std::string_view replacement) {
  std::string out(replacement);
  if (!original.empty() && std::isupper(static_cast<unsigned char>(original.front())) && !out.empty())
    out.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(out.front())));
  return out;
}

std::string_view synonym_of(std::string_view lower_word) {
  for (const auto& [a, b] : kSynonyms) {
    if (a == lower_word) return b;
    if (b == lower_word) return a;
  }
  return {};
}

// Splits a raw word into leading punctuation, core and trailing punctuation.
struct WordParts {
  std::string lead, core, trail;
  static WordParts of(const std::string& word) {
    WordParts p;
    std::size_t b = 0;
    std::size_t e = word.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(word[e - 1]))) --e;
    p.lead = word.substr(0, b);
    p.core = word.substr(b, e - b);
    p.trail = word.substr(e);
    return p;
  }
  std::string join() const { return lead + core + trail; }
};

std::vector<std::string> substitute(const std::vector<std::string>& words,
                                    const std::set<std::string>& types) {
  std::vector<std::string> out = words;
  for (auto& word : out) {
    auto parts = WordParts::of(word);
    const auto key = lower(parts.core);
    if (types.count(key) == 0) continue;
    parts.core = match_case(parts.core, synonym_of(key));
    word = parts.join();
  }
  return out;
}

bool starts_with_vowel(std::string_view word) {
  for (char c : word) {
    if (!std::isalpha(static_cast<unsigned char>(c))) continue;
    return std::string_view("aeiou").find(static_cast<char>(std::tolower(static_cast<unsigned char>(c)))) !=
           std::string_view::npos;
  }
  return false;
}

std::optional<std::vector<std::string>> toggle_article(const std::vector<std::string>& words) {
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    auto parts = WordParts::of(words[i]);
    const auto key = lower(parts.core);
    std::string replacement;
    if (key == "the") replacement = starts_with_vowel(words[i + 1]) ? "an" : "a";
    else if (key == "a" || key == "an") replacement = "the";
    else continue;
    auto out = words;
    parts.core = match_case(parts.core, replacement);
    out[i] = parts.join();
    return out;
  }
  return std::nullopt;
}

CandidateSet paraphrase(const std::string& input, std::size_t limit) {
  const auto sentence = Words::split(input);
  const auto& w = sentence.words;
  const auto& term = sentence.terminal;
  const auto types = content_types(input);
  CandidateCollector out(limit, input);
  auto shares_content = [&](const std::string& c) {
    if (types.empty()) return true;
    const auto out_types = content_types(c);
    std::size_t shared = 0;
    for (const auto& t : types) shared += out_types.count(t);
    return static_cast<double>(shared) >= 0.8 * static_cast<double>(types.size());
  };

  // Distinct content types with a synonym, in sentence order.
  std::vector<std::string> hits;
  for (const auto& word : w) {
    const auto key = lower(WordParts::of(word).core);
    if (key.empty() || is_stopword(key) || synonym_of(key).empty()) continue;
    if (std::find(hits.begin(), hits.end(), key) == hits.end()) hits.push_back(key);
  }
  const auto max_subs = std::min(hits.size(), types.size() / 5);

  if (max_subs > 0) {
    out.offer(render(substitute(w, {hits.begin(), hits.begin() + static_cast<long>(max_subs)}), term),
              shares_content);
    for (const auto& h : hits) out.offer(render(substitute(w, {h}), term), shares_content);
  }
  if (auto toggled = toggle_article(w)) {
    out.offer(render(*toggled, term), shares_content);
    if (max_subs > 0)
      out.offer(render(substitute(*toggled, {hits.front()}), term), shares_content);
  }
  if (!w.empty()) {
    auto prefixed = w;
    auto& first = prefixed.front();
    auto parts = WordParts::of(first);
    if (is_stopword(lower(parts.core)) && !parts.core.empty())
      parts.core.front() = static_cast<char>(std::tolower(static_cast<unsigned char>(parts.core.front())));
    first = parts.join();
    prefixed.insert(prefixed.begin(), "Reportedly,");
    out.offer(render(prefixed, term), shares_content);
  }
  auto set = out.take();
  if (set.candidates.empty()) throw EmptyGeneration("no paraphrase for: " + input);
  return set;
}

std::vector<std::string> first_clause(const std::vector<std::string>& words) {
  for (std::size_t i = 0; i < words.size(); ++i)
    if (ends_with_comma(words[i])) return {words.begin(), words.begin() + static_cast<long>(i + 1)};
  return words;
}

bool has_content(const std::vector<std::string>& words) {
  for (const auto& word : words)
    for (const auto& t : tokenize(word))
      if (!is_stopword(t)) return true;
  return false;
}

CandidateSet fuse(const std::string& left, const std::string& right, std::size_t limit) {
  const auto a = Words::split(left);
  auto b = Words::split(right);
  if (!b.words.empty()) {
    auto parts = WordParts::of(b.words.front());
    if (is_stopword(lower(parts.core)) && !parts.core.empty()) {
      parts.core.front() = static_cast<char>(std::tolower(static_cast<unsigned char>(parts.core.front())));
      b.words.front() = parts.join();
    }
  }
  const auto term = a.terminal.empty() ? (b.terminal.empty() ? std::string(".") : b.terminal) : a.terminal;
  const auto left_types = content_types(left);
  const auto right_types = content_types(right);
  auto covers_both = [&](const std::string& c) {
    const auto types = content_types(c);
    auto any_of = [&](const std::set<std::string>& src) {
      if (src.empty()) return true;
      return std::any_of(src.begin(), src.end(), [&](const auto& t) { return types.count(t) > 0; });
    };
    return any_of(left_types) && any_of(right_types);
  };

  std::vector<std::vector<std::string>> left_parts;
  std::vector<std::vector<std::string>> right_parts;
  auto push_part = [](auto& parts, std::vector<std::string> p) {
    if (p.empty()) return;
    p.back() = strip_trailing_comma(p.back());
    if (std::find(parts.begin(), parts.end(), p) == parts.end()) parts.push_back(std::move(p));
  };
  const auto a1 = first_clause(a.words);
  const auto b1 = first_clause(b.words);
  push_part(left_parts, has_content(a1) ? a1 : a.words);
  push_part(left_parts, a.words);
  push_part(right_parts, has_content(b1) ? b1 : b.words);
  push_part(right_parts, b.words);
  // Moving the splice point one word earlier on the left side.
  if (a1.size() > 2) push_part(left_parts, {a1.begin(), a1.end() - 1});

  CandidateCollector out(limit, std::string());
  const std::size_t rounds = std::max(left_parts.size(), right_parts.size());
  for (std::size_t r = 0; r < rounds * rounds && !out.full(); ++r) {
    const auto li = r % left_parts.size();
    const auto ri = (r / left_parts.size()) % right_parts.size();
    std::vector<std::string> words = left_parts[li];
    words.push_back("and");
    words.insert(words.end(), right_parts[ri].begin(), right_parts[ri].end());
    out.offer(render(words, term), covers_both);
  }
  auto set = out.take();
  if (set.candidates.empty()) throw EmptyGeneration("could not fuse inputs");
  return set;
}

}  // namespace

CandidateSet ReferenceBackend::execute(const ModuleRequest& request) {
  check_request(request);
  switch (request.kind) {
    case ModuleKind::compression: return compress(request.inputs[0], request.max_candidates);
    case ModuleKind::paraphrase: return paraphrase(request.inputs[0], request.max_candidates);
    case ModuleKind::fusion:
      return fuse(request.inputs[0], request.inputs[1], request.max_candidates);
  }
  throw ContractError("unknown module kind");
}

}  // namespace spforge
