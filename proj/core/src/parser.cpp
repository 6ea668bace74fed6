// Recursive-descent parser for the system-config text format.

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "dynbound/polyfield.hpp"

namespace dynbound {

ParseError::ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { Ident, Number, Plus, Minus, Star, Caret, LParen, RParen, Slash, Equals, End };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t column;  // 1-based
  double value = 0.0;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of line";
  return "'" + std::string(t.text) + "'";
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> lex(std::string_view line, std::size_t line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (ident_start(c)) {
      while (i < line.size() && ident_char(line[i])) ++i;
      out.push_back({Tok::Ident, line.substr(start, i - start), start + 1});
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < line.size() && digit(line[i + 1]))) {
      while (i < line.size() && digit(line[i])) ++i;
      if (i < line.size() && line[i] == '.') {
        ++i;
        while (i < line.size() && digit(line[i])) ++i;
      }
      if (i < line.size() && (line[i] == 'e' || line[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < line.size() && (line[j] == '+' || line[j] == '-')) ++j;
        if (j < line.size() && digit(line[j])) {
          i = j;
          while (i < line.size() && digit(line[i])) ++i;
        }
      }
      Token t{Tok::Number, line.substr(start, i - start), start + 1};
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
      if (res.ec != std::errc() || !std::isfinite(t.value)) {
        throw ParseError(ParseError::Kind::Syntax, line_no, start + 1,
                         "invalid number '" + std::string(t.text) + "'");
      }
      out.push_back(t);
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '^': kind = Tok::Caret; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case '/': kind = Tok::Slash; break;
      case '=': kind = Tok::Equals; break;
      default:
        throw ParseError(ParseError::Kind::Syntax, line_no, start + 1,
                         std::string("unexpected character '") + c + "'");
    }
    out.push_back({kind, line.substr(start, 1), start + 1});
    ++i;
  }
  out.push_back({Tok::End, {}, line.size() + 1});
  return out;
}

struct Line {
  std::size_t number;
  std::vector<Token> tokens;
};

class ExprParser {
 public:
  ExprParser(const Line& line, std::size_t pos, const std::vector<std::string>& vars,
             const std::map<std::string, double>& params)
      : line_(line), pos_(pos), vars_(vars), params_(params) {}

  Polynomial parse_all() {
    Polynomial p = expr();
    if (peek().kind != Tok::End) fail(peek(), "unexpected " + describe(peek()));
    return p;
  }

 private:
  const Token& peek() const { return line_.tokens[pos_]; }
  const Token& next() { return line_.tokens[pos_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg,
                         ParseError::Kind kind = ParseError::Kind::Syntax) const {
    throw ParseError(kind, line_.number, t.column, msg);
  }

  Polynomial expr() {
    Polynomial acc = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const bool minus = next().kind == Tok::Minus;
      Polynomial rhs = term();
      if (minus) {
        acc -= rhs;
      } else {
        acc += rhs;
      }
    }
    return acc;
  }

  Polynomial term() {
    Polynomial acc = unary();
    while (peek().kind == Tok::Star) {
      next();
      acc = acc * unary();
    }
    return acc;
  }

  Polynomial unary() {
    if (peek().kind == Tok::Minus) {
      next();
      return -unary();
    }
    if (peek().kind == Tok::Plus) {
      next();
      return unary();
    }
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    while (peek().kind == Tok::Caret) {
      next();
      const Token& e = next();
      if (e.kind != Tok::Number || e.text.find_first_not_of("0123456789") != std::string_view::npos) {
        fail(e, "exponent must be a non-negative integer literal, got " + describe(e));
      }
      unsigned exponent = 0;
      auto res = std::from_chars(e.text.data(), e.text.data() + e.text.size(), exponent);
      if (res.ec != std::errc() || exponent > 64) fail(e, "exponent out of range");
      base = base.pow(exponent);
    }
    return base;
  }

  Polynomial primary() {
    const Token& t = next();
    const std::size_t n = vars_.size();
    switch (t.kind) {
      case Tok::Number:
        return Polynomial::constant(n, t.value);
      case Tok::Ident: {
        const std::string name(t.text);
        for (std::size_t i = 0; i < n; ++i) {
          if (vars_[i] == name) return Polynomial::variable(n, i);
        }
        if (auto it = params_.find(name); it != params_.end()) return Polynomial::constant(n, it->second);
        fail(t, "undefined variable or parameter '" + name + "'", ParseError::Kind::UndefinedName);
      }
      case Tok::LParen: {
        Polynomial inner = expr();
        const Token& close = next();
        if (close.kind != Tok::RParen) fail(close, "expected ')', got " + describe(close));
        return inner;
      }
      default:
        fail(t, "unexpected " + describe(t));
    }
  }

  const Line& line_;
  std::size_t pos_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& params_;
};

bool is_param_line(const Line& l) {
  return l.tokens.size() > 1 && l.tokens[0].kind == Tok::Ident && l.tokens[0].text == "param";
}

}  // namespace

PolyField parse_system(std::string_view text) {
  std::vector<Line> lines;
  std::size_t line_no = 0;
  while (!text.empty() || line_no == 0) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    auto tokens = lex(raw, line_no);
    if (tokens.size() > 1) lines.push_back({line_no, std::move(tokens)});
    if (text.empty()) break;
  }

  std::map<std::string, double> params;
  std::vector<std::string> vars;
  std::vector<std::pair<const Line*, std::size_t>> equations;  // line, index of first rhs token

  for (const auto& l : lines) {
    const auto& t = l.tokens;
    auto syntax = [&](std::size_t i, const std::string& msg) {
      throw ParseError(ParseError::Kind::Syntax, l.number, t[i].column, msg);
    };
    if (is_param_line(l)) {
      if (t[1].kind != Tok::Ident) syntax(1, "expected parameter name, got " + describe(t[1]));
      if (t[2].kind != Tok::Equals) syntax(2, "expected '=' after parameter name");
      std::size_t i = 3;
      double sign = 1.0;
      if (t[i].kind == Tok::Minus || t[i].kind == Tok::Plus) {
        sign = t[i].kind == Tok::Minus ? -1.0 : 1.0;
        ++i;
      }
      if (t[i].kind != Tok::Number) syntax(i, "expected a real literal, got " + describe(t[i]));
      if (t[i + 1].kind != Tok::End) syntax(i + 1, "unexpected " + describe(t[i + 1]));
      const std::string name(t[1].text);
      if (!params.emplace(name, sign * t[i].value).second) {
        throw ParseError(ParseError::Kind::Dimension, l.number, t[1].column,
                         "parameter '" + name + "' defined twice");
      }
      continue;
    }
    // d<var>/dt = <expr>
    if (t[0].kind != Tok::Ident || t[0].text.size() < 2 || t[0].text[0] != 'd') {
      syntax(0, "expected 'param' or 'd<var>/dt =', got " + describe(t[0]));
    }
    if (t[1].kind != Tok::Slash) syntax(1, "expected '/' in derivative, got " + describe(t[1]));
    if (t[2].kind != Tok::Ident || t[2].text != "dt") syntax(2, "expected 'dt', got " + describe(t[2]));
    if (t[3].kind != Tok::Equals) syntax(3, "expected '=', got " + describe(t[3]));
    const std::string var(t[0].text.substr(1));
    if (std::find(vars.begin(), vars.end(), var) != vars.end()) {
      throw ParseError(ParseError::Kind::Dimension, l.number, t[0].column,
                       "second equation for variable '" + var + "'");
    }
    vars.push_back(var);
    equations.emplace_back(&l, 4);
  }

  if (vars.empty()) throw ParseError(ParseError::Kind::Dimension, line_no, 1, "no equations found");
  for (const auto& [line, pos] : equations) {
    const std::string var(line->tokens[0].text.substr(1));
    if (params.count(var) != 0) {
      throw ParseError(ParseError::Kind::Dimension, line->number, line->tokens[0].column,
                       "'" + var + "' is both a parameter and a variable");
    }
  }

  std::vector<Polynomial> components;
  components.reserve(vars.size());
  for (const auto& [line, pos] : equations) {
    components.push_back(ExprParser(*line, pos, vars, params).parse_all());
  }
  return PolyField(std::move(vars), std::move(components), std::move(params));
}

}  // namespace dynbound
