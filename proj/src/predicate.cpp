#include "patternflow/predicate.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <vector>

#include "patternflow/errors.hpp"

namespace patternflow {
namespace {

using ValueFn = std::function<std::string(const Exchange&)>;
using BoolFn = std::function<bool(const Exchange&)>;

struct Token {
  enum class Kind { ident, string, number, op, lparen, rparen, end };
  Kind kind;
  std::string text;
  std::size_t pos;
};

[[noreturn]] void fail(std::size_t pos, const std::string& what) {
  raise("PredicateSyntax", what + " at offset " + std::to_string(pos));
}

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      i++;
      continue;
    }
    if (c == '(') {
      out.push_back({Token::Kind::lparen, "(", i++});
      continue;
    }
    if (c == ')') {
      out.push_back({Token::Kind::rparen, ")", i++});
      continue;
    }
    if (c == '\'' || c == '"') {
      char quote = c;
      std::size_t start = i++;
      std::string text;
      while (i < s.size() && s[i] != quote) {
        if (s[i] == '\\' && i + 1 < s.size()) i++;
        text.push_back(s[i++]);
      }
      if (i >= s.size()) fail(start, "unterminated string literal");
      i++;
      out.push_back({Token::Kind::string, text, start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t start = i;
      i++;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) ||
                              s[i] == '.'))
        i++;
      out.push_back({Token::Kind::number, s.substr(start, i - start), start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) ||
                              s[i] == '_'))
        i++;
      out.push_back({Token::Kind::ident, s.substr(start, i - start), start});
      continue;
    }
    static const char* ops[] = {"==", "!=", "<=", ">=", "&&", "||",
                                "<",  ">",  "!"};
    const char* matched = nullptr;
    for (const char* op : ops) {
      if (s.compare(i, std::char_traits<char>::length(op), op) == 0) {
        matched = op;
        break;
      }
    }
    if (!matched) fail(i, std::string("unexpected character '") + c + "'");
    out.push_back({Token::Kind::op, matched, i});
    i += std::char_traits<char>::length(matched);
  }
  out.push_back({Token::Kind::end, "", s.size()});
  return out;
}

std::optional<double> as_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  BoolFn parse() {
    BoolFn fn = parse_or();
    if (peek().kind != Token::Kind::end)
      fail(peek().pos, "trailing input '" + peek().text + "'");
    return fn;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token take() { return tokens_[pos_++]; }

  bool accept_op(const std::string& op) {
    if (peek().kind == Token::Kind::op && peek().text == op) {
      pos_++;
      return true;
    }
    return false;
  }

  BoolFn parse_or() {
    BoolFn lhs = parse_and();
    while (accept_op("||")) {
      BoolFn rhs = parse_and();
      lhs = [lhs, rhs](const Exchange& e) { return lhs(e) || rhs(e); };
    }
    return lhs;
  }

  BoolFn parse_and() {
    BoolFn lhs = parse_not();
    while (accept_op("&&")) {
      BoolFn rhs = parse_not();
      lhs = [lhs, rhs](const Exchange& e) { return lhs(e) && rhs(e); };
    }
    return lhs;
  }

  BoolFn parse_not() {
    if (accept_op("!")) {
      BoolFn inner = parse_not();
      return [inner](const Exchange& e) { return !inner(e); };
    }
    if (peek().kind == Token::Kind::lparen) {
      pos_++;
      BoolFn inner = parse_or();
      if (peek().kind != Token::Kind::rparen) fail(peek().pos, "expected ')'");
      pos_++;
      return inner;
    }
    return parse_comparison();
  }

  BoolFn parse_comparison() {
    ValueFn lhs = parse_value();
    if (peek().kind != Token::Kind::op) fail(peek().pos, "expected comparison");
    std::string op = take().text;
    if (op != "==" && op != "!=" && op != "<" && op != "<=" && op != ">" &&
        op != ">=")
      fail(peek().pos, "'" + op + "' is not a comparison operator");
    ValueFn rhs = parse_value();
    return [lhs, rhs, op](const Exchange& e) {
      std::string a = lhs(e);
      std::string b = rhs(e);
      int cmp;
      auto na = as_number(a);
      auto nb = as_number(b);
      if (na && nb)
        cmp = (*na < *nb) ? -1 : (*na > *nb ? 1 : 0);
      else
        cmp = a.compare(b) < 0 ? -1 : (a.compare(b) > 0 ? 1 : 0);
      if (op == "==") return cmp == 0;
      if (op == "!=") return cmp != 0;
      if (op == "<") return cmp < 0;
      if (op == "<=") return cmp <= 0;
      if (op == ">") return cmp > 0;
      return cmp >= 0;
    };
  }

  ValueFn parse_value() {
    Token t = take();
    if (t.kind == Token::Kind::string || t.kind == Token::Kind::number) {
      std::string lit = t.text;
      return [lit](const Exchange&) { return lit; };
    }
    if (t.kind != Token::Kind::ident)
      fail(t.pos, "expected value, got '" + t.text + "'");

    if (peek().kind != Token::Kind::lparen)
      fail(peek().pos, "expected '(' after '" + t.text + "'");
    pos_++;

    std::string arg;
    bool hasArg = false;
    if (peek().kind == Token::Kind::string) {
      arg = take().text;
      hasArg = true;
    }
    if (peek().kind != Token::Kind::rparen) fail(peek().pos, "expected ')'");
    pos_++;

    if (t.text == "header") {
      if (!hasArg) fail(t.pos, "header() needs a name argument");
      return [arg](const Exchange& e) {
        return e.message().header(arg).value_or("");
      };
    }
    if (t.text == "property") {
      if (!hasArg) fail(t.pos, "property() needs a name argument");
      return [arg](const Exchange& e) { return e.property(arg).value_or(""); };
    }
    if (t.text == "body") {
      if (hasArg) fail(t.pos, "body() takes no argument");
      return [](const Exchange& e) { return e.message().body_text(); };
    }
    if (t.text == "bodySize") {
      if (hasArg) fail(t.pos, "bodySize() takes no argument");
      return [](const Exchange& e) {
        return std::to_string(e.message().body().size());
      };
    }
    fail(t.pos, "unknown accessor '" + t.text + "'");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Predicate Predicate::parse(const std::string& text) {
  Parser parser(lex(text));
  return Predicate(text, parser.parse());
}

}  // namespace patternflow
