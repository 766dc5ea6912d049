#include "anon_enigma/parser.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace anon_enigma {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip_blank();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_blank();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  bool accept(char c) {
    if (peek() != c) return false;
    advance();
    return true;
  }

  std::string word() {
    skip_blank();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '$') advance();
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) advance();
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_, column_);
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

bool is_variable_name(const std::string& w) {
  return std::isupper(static_cast<unsigned char>(w[0])) || w[0] == '_';
}

class ClauseParser {
 public:
  ClauseParser(Lexer& lex, Signature& sig) : lex_(lex), sig_(sig) {}

  std::vector<Literal> disjunction() {
    std::vector<Literal> lits;
    const bool parenthesized = lex_.accept('(');
    do {
      bool positive = true;
      while (lex_.accept('~')) positive = !positive;
      std::string w = lex_.word();
      if (w == "$false") {
        if (!positive) lex_.fail("negated $false");
        continue;
      }
      if (w[0] == '$' || is_variable_name(w)) lex_.fail("expected predicate, got '" + w + "'");
      auto args = arguments();
      SymbolId head = intern(w, SymbolKind::kPredicate, args.size());
      lits.push_back(Literal{positive, Term::apply(head, std::move(args))});
    } while (lex_.accept('|'));
    if (parenthesized) lex_.expect(')');
    return lits;
  }

 private:
  std::vector<Term> arguments() {
    std::vector<Term> args;
    if (!lex_.accept('(')) return args;
    do {
      args.push_back(term());
    } while (lex_.accept(','));
    lex_.expect(')');
    return args;
  }

  Term term() {
    std::string w = lex_.word();
    if (w[0] == '$') lex_.fail("unsupported defined symbol '" + w + "'");
    if (is_variable_name(w)) {
      auto [it, inserted] = vars_.try_emplace(w, static_cast<VarId>(vars_.size()));
      return Term::variable(it->second);
    }
    auto args = arguments();
    SymbolId head = intern(w, SymbolKind::kFunction, args.size());
    return Term::apply(head, std::move(args));
  }

  SymbolId intern(const std::string& name, SymbolKind kind, std::size_t arity) {
    return sig_.intern(name, kind, static_cast<std::uint32_t>(arity));
  }

  Lexer& lex_;
  Signature& sig_;
  std::unordered_map<std::string, VarId> vars_;
};

ClauseRole parse_role(Lexer& lex, const std::string& role) {
  if (role == "axiom" || role == "hypothesis") return ClauseRole::kAxiom;
  if (role == "negated_conjecture") return ClauseRole::kNegatedConjecture;
  lex.fail("unsupported role '" + role + "'");
}

}  // namespace

Problem parse_problem(std::string_view text, std::string name) {
  Problem problem;
  problem.name = std::move(name);
  Lexer lex(text);
  while (!lex.at_end()) {
    if (lex.word() != "cnf") lex.fail("expected 'cnf'");
    lex.expect('(');
    Clause clause;
    clause.id = static_cast<ClauseId>(problem.clauses.size());
    clause.name = lex.word();
    lex.expect(',');
    clause.role = parse_role(lex, lex.word());
    lex.expect(',');
    ClauseParser cp(lex, problem.signature);
    clause.literals = cp.disjunction();
    lex.expect(')');
    lex.expect('.');
    problem.clauses.push_back(std::move(clause));
  }
  return problem;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), path.stem().string());
}

std::vector<Literal> parse_literals(std::string_view text, Signature& sig) {
  Lexer lex(text);
  ClauseParser cp(lex, sig);
  auto lits = cp.disjunction();
  if (!lex.at_end()) lex.fail("trailing input");
  return lits;
}

}  // namespace anon_enigma
