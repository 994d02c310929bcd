#include "spforge/dsl.hpp"

#include <cctype>
#include <set>

namespace spforge {

namespace {

struct Token {
  enum class Type { lparen, rparen, semicolon, comma, kind, leaf, oov, end };
  Type type;
  std::size_t position;
  std::string text;
  ModuleKind kind = ModuleKind::compression;
  std::optional<std::size_t> number;  // 1-based; empty on overflow
};

bool is_delimiter(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';' ||
         c == ',';
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token tok{Token::Type::oov, i, std::string(1, c), ModuleKind::compression, std::nullopt};
    switch (c) {
      case '(': tok.type = Token::Type::lparen; ++i; tokens.push_back(tok); continue;
      case ')': tok.type = Token::Type::rparen; ++i; tokens.push_back(tok); continue;
      case ';': tok.type = Token::Type::semicolon; ++i; tokens.push_back(tok); continue;
      case ',': tok.type = Token::Type::comma; ++i; tokens.push_back(tok); continue;
      default: break;
    }
    std::size_t j = i;
    if (c == '<') {
      while (j < text.size() && text[j] != '>' && !is_delimiter(text[j])) ++j;
      if (j < text.size() && text[j] == '>') ++j;
    } else {
      while (j < text.size() && !is_delimiter(text[j])) ++j;
    }
    tok.text = std::string(text.substr(i, j - i));
    i = j;
    const auto& w = tok.text;
    if (w.size() >= 4 && w[0] == '<' && w[1] == 'D' && w.back() == '>') {
      const auto digits = std::string_view(w).substr(2, w.size() - 3);
      bool all_digits = !digits.empty();
      for (char d : digits) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(d));
      if (all_digits) {
        tok.type = Token::Type::leaf;
        if (digits.size() <= 9) tok.number = std::stoul(std::string(digits));
      }
    } else if (auto kind = parse_module_kind(w)) {
      tok.type = Token::Type::kind;
      tok.kind = *kind;
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

class Parser {
 public:
  Parser(std::string_view text, std::size_t doc_size) : text_(text), doc_size_(doc_size) {}

  ProgramSkeleton run() {
    const auto all = lex(text_);
    for (const auto& t : all) {
      if (t.type == Token::Type::oov) {
        add(DslDiagnostic::Code::OOVToken, t.position, "out-of-vocabulary token '" + t.text + "'");
      } else {
        tokens_.push_back(t);
      }
    }
    check_balance();
    tokens_.push_back(Token{Token::Type::end, text_.size(), "", ModuleKind::compression, std::nullopt});

    ProgramSkeleton program;
    if (tokens_.size() == 1) {
      add(DslDiagnostic::Code::EmptyProgram, 0, "no program");
      return program;
    }
    while (true) {
      if (peek().type == Token::Type::semicolon || peek().type == Token::Type::end) {
        add(DslDiagnostic::Code::EmptyProgram, peek().position, "empty tree");
      } else {
        tree_leaves_.clear();
        if (auto tree = parse_tree()) program.trees.push_back(std::move(*tree));
      }
      if (peek().type == Token::Type::end) break;
      if (peek().type != Token::Type::semicolon) {
        unexpected(peek(), "expected ';' between trees");
        while (peek().type != Token::Type::semicolon && peek().type != Token::Type::end) advance();
        if (peek().type == Token::Type::end) break;
      }
      advance();  // ';'
    }
    return program;
  }

  std::vector<DslDiagnostic> diagnostics;

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }

  void add(DslDiagnostic::Code code, std::size_t position, std::string message) {
    diagnostics.push_back({code, position, std::move(message)});
  }

  void unexpected(const Token& t, const std::string& what) {
    // With unbalanced parentheses, structural complaints are consequences of
    // that one problem; report it once.
    if (unbalanced_) return;
    add(DslDiagnostic::Code::UnexpectedToken, t.position,
        what + (t.type == Token::Type::end ? ", got end of input" : ", got '" + t.text + "'"));
  }

  void check_balance() {
    long depth = 0;
    for (const auto& t : tokens_) {
      if (t.type == Token::Type::lparen) ++depth;
      if (t.type == Token::Type::rparen && --depth < 0) {
        add(DslDiagnostic::Code::UnbalancedParens, t.position, "unmatched ')'");
        unbalanced_ = true;
        depth = 0;
      }
    }
    if (depth > 0) {
      add(DslDiagnostic::Code::UnbalancedParens, text_.size(),
          std::to_string(depth) + " unclosed '('");
      unbalanced_ = true;
    }
  }

  std::optional<SkeletonNode> leaf_node(const Token& t) {
    if (!t.number || *t.number < 1 || *t.number > doc_size_) {
      add(DslDiagnostic::Code::BadIdentifier, t.position,
          t.text + " is not a sentence of a " + std::to_string(doc_size_) + "-sentence document");
      return std::nullopt;
    }
    const std::size_t index = *t.number - 1;
    if (!tree_leaves_.insert(index).second) {
      add(DslDiagnostic::Code::DuplicateLeaf, t.position, t.text + " appears twice in one tree");
    }
    SkeletonNode n;
    n.leaf = index;
    return n;
  }

  // Skips to just past the ')' matching an already consumed '('.
  void skip_group() {
    int depth = 1;
    while (peek().type != Token::Type::end) {
      const auto type = advance().type;
      if (type == Token::Type::lparen) ++depth;
      if (type == Token::Type::rparen && --depth == 0) return;
    }
  }

  std::optional<SkeletonNode> parse_tree() {
    const Token& t = advance();
    switch (t.type) {
      case Token::Type::leaf:
        return leaf_node(t);
      case Token::Type::lparen: {
        if (peek().type != Token::Type::leaf) {
          unexpected(peek(), "expected a sentence identifier after '('");
          skip_group();
          return std::nullopt;
        }
        auto leaf = leaf_node(advance());
        if (peek().type != Token::Type::rparen) {
          unexpected(peek(), "expected ')' after a singleton identifier");
          skip_group();
          return std::nullopt;
        }
        advance();
        return leaf;
      }
      case Token::Type::kind:
        return parse_application(t);
      default:
        unexpected(t, "expected a module name or sentence identifier");
        return std::nullopt;
    }
  }

  std::optional<SkeletonNode> parse_application(const Token& kind_token) {
    if (peek().type != Token::Type::lparen) {
      unexpected(peek(), "expected '(' after " + kind_token.text);
      return std::nullopt;
    }
    advance();
    SkeletonNode node;
    node.kind = kind_token.kind;
    std::size_t args = 0;
    bool broken = false;
    bool closed = false;
    while (true) {
      const auto type = peek().type;
      if (type == Token::Type::rparen) {
        advance();
        closed = true;
        break;
      }
      if (type == Token::Type::comma) {
        advance();
        continue;
      }
      if (type == Token::Type::end || type == Token::Type::semicolon) break;
      if (type == Token::Type::leaf || type == Token::Type::lparen || type == Token::Type::kind) {
        auto child = parse_tree();
        ++args;
        if (child) node.children.push_back(std::move(*child));
        else broken = true;
        continue;
      }
      unexpected(peek(), "unexpected token in argument list");
      advance();
      broken = true;
    }
    if (!closed) unexpected(peek(), "expected ')' to close " + kind_token.text);
    if (args != arity(*node.kind)) {
      add(DslDiagnostic::Code::ArityMismatch, kind_token.position,
          kind_token.text + " takes " + std::to_string(arity(*node.kind)) + " operand(s), got " +
              std::to_string(args));
      broken = true;
    }
    if (broken || !closed) return std::nullopt;
    return node;
  }

  std::string_view text_;
  std::size_t doc_size_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool unbalanced_ = false;
  std::set<std::size_t> tree_leaves_;
};

void serialize_into(const SkeletonNode& node, std::string& out) {
  if (node.is_leaf()) {
    out += "<" + sentence_id(node.leaf) + ">";
    return;
  }
  out += to_string(*node.kind);
  out += " (";
  for (const auto& c : node.children) {
    out.push_back(' ');
    serialize_into(c, out);
  }
  out += " )";
}

void signature_into(const SkeletonNode& node, std::string& out) {
  if (node.is_leaf()) {
    out += "·";
    return;
  }
  out += to_string(*node.kind);
  out += " ( ";
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (i > 0) out += " , ";
    signature_into(node.children[i], out);
  }
  out += " )";
}

}  // namespace

SkeletonNode skeleton_of(const SPNode& node) {
  SkeletonNode out;
  out.kind = node.kind;
  if (node.leaf_index) out.leaf = *node.leaf_index;
  for (const auto& c : node.children)
    if (c) out.children.push_back(skeleton_of(*c));
  return out;
}

ProgramSkeleton skeleton_of(const SummarizationProgram& program) {
  ProgramSkeleton out;
  for (const auto& t : program.trees)
    if (t.root) out.trees.push_back(skeleton_of(*t.root));
  return out;
}

std::string serialize(const SkeletonNode& tree) {
  if (tree.is_leaf()) return "( <" + sentence_id(tree.leaf) + "> )";
  std::string out;
  serialize_into(tree, out);
  return out;
}

std::string serialize(const ProgramSkeleton& skeleton) {
  std::string out;
  for (std::size_t i = 0; i < skeleton.trees.size(); ++i) {
    if (i > 0) out += " ; ";
    out += serialize(skeleton.trees[i]);
  }
  return out;
}

std::string serialize(const SummarizationProgram& program) {
  return serialize(skeleton_of(program));
}

std::string_view to_string(DslDiagnostic::Code code) {
  using Code = DslDiagnostic::Code;
  switch (code) {
    case Code::UnbalancedParens: return "UnbalancedParens";
    case Code::OOVToken: return "OOVToken";
    case Code::ArityMismatch: return "ArityMismatch";
    case Code::BadIdentifier: return "BadIdentifier";
    case Code::EmptyProgram: return "EmptyProgram";
    case Code::UnexpectedToken: return "UnexpectedToken";
    case Code::DuplicateLeaf: return "DuplicateLeaf";
  }
  return "Unknown";
}

namespace {
std::string describe(const std::vector<DslDiagnostic>& diagnostics) {
  std::string out = "malformed program";
  for (const auto& d : diagnostics) {
    out += "; ";
    out += to_string(d.code);
    out += " at " + std::to_string(d.position) + ": " + d.message;
  }
  return out;
}
}  // namespace

ParseError::ParseError(std::vector<DslDiagnostic> diagnostics)
    : InputError(describe(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::vector<DslDiagnostic> check_wellformed(std::string_view text, std::size_t doc_size) {
  Parser parser(text, doc_size);
  parser.run();
  return std::move(parser.diagnostics);
}

ProgramSkeleton parse(std::string_view text, std::size_t doc_size) {
  Parser parser(text, doc_size);
  auto program = parser.run();
  if (!parser.diagnostics.empty()) throw ParseError(std::move(parser.diagnostics));
  return program;
}

SkeletonNode parse_signature(std::string_view signature) {
  std::string numbered;
  std::size_t leaves = 0;
  const std::string_view dot = "·";
  for (std::size_t i = 0; i < signature.size();) {
    if (signature.substr(i, dot.size()) == dot) {
      numbered += "<D" + std::to_string(++leaves) + ">";
      i += dot.size();
    } else {
      numbered.push_back(signature[i++]);
    }
  }
  auto program = parse(numbered, leaves);
  if (program.trees.size() != 1) {
    throw ParseError({{DslDiagnostic::Code::UnexpectedToken, 0,
                       "a signature describes exactly one tree"}});
  }
  return std::move(program.trees.front());
}

std::size_t leaf_count(const SkeletonNode& node) {
  if (node.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : node.children) n += leaf_count(c);
  return n;
}

int height(const SkeletonNode& node) {
  int h = 0;
  for (const auto& c : node.children) h = std::max(h, height(c) + 1);
  return h;
}

std::string structure_signature(const SkeletonNode& node) {
  if (node.is_leaf()) return "( · )";
  std::string out;
  signature_into(node, out);
  return out;
}

}  // namespace spforge
