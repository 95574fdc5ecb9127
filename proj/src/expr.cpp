#include "mixp/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "mixp/error.hpp"

namespace mixp {

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Kind;

const std::map<std::string, int, std::less<>>& functions() {
  static const std::map<std::string, int, std::less<>> table{
      {"sin", 1}, {"cos", 1}, {"exp", 1}, {"log", 1}, {"abs", 1}, {"min", 2}, {"max", 2}};
  return table;
}

NodePtr make(Kind k, std::vector<NodePtr> args = {}, double value = 0.0, std::string name = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->value = value;
  n->name = std::move(name);
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    skip_space();
    if (pos_ >= text_.size()) fail("empty expression", pos_);
    auto e = expr();
    skip_space();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("expression: " + what, line, col);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' before end of input", pos_);
      fail(std::string("expected '") + c + "' but found '" + text_[pos_] + "'", pos_);
    }
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make(Kind::add, {lhs, term()});
      else if (accept('-'))
        lhs = make(Kind::sub, {lhs, term()});
      else
        return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make(Kind::mul, {lhs, unary()});
      else if (accept('/'))
        lhs = make(Kind::div, {lhs, unary()});
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Kind::pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected '") + c + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (res.ec != std::errc() || res.ptr == text_.data() + pos_) fail("malformed number", start);
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    if (!std::isfinite(v)) fail("number out of range", start);
    return make(Kind::number, {}, v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    if (name == "x") return make(Kind::var_x);
    if (name == "y") return make(Kind::var_y);
    if (name == "pi") return make(Kind::pi);
    const auto it = functions().find(name);
    if (it == functions().end()) fail("unknown identifier '" + name + "'", start);
    expect('(');
    std::vector<NodePtr> args{expr()};
    while (accept(',')) args.push_back(expr());
    expect(')');
    if (static_cast<int>(args.size()) != it->second)
      fail(name + " takes " + std::to_string(it->second) + " argument" + (it->second == 1 ? "" : "s"), start);
    return make(Kind::call, std::move(args), 0.0, name);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, double x, double y) {
  auto a = [&](std::size_t i) { return eval(*n.args[i], x, y); };
  switch (n.kind) {
    case Kind::number: return n.value;
    case Kind::var_x: return x;
    case Kind::var_y: return y;
    case Kind::pi: return M_PI;
    case Kind::neg: return -a(0);
    case Kind::add: return a(0) + a(1);
    case Kind::sub: return a(0) - a(1);
    case Kind::mul: return a(0) * a(1);
    case Kind::div: return a(0) / a(1);
    case Kind::pow: return std::pow(a(0), a(1));
    case Kind::call: {
      const double v = a(0);
      if (n.name == "sin") return std::sin(v);
      if (n.name == "cos") return std::cos(v);
      if (n.name == "exp") return std::exp(v);
      if (n.name == "log") return std::log(v);
      if (n.name == "abs") return std::abs(v);
      if (n.name == "min") return std::min(v, a(1));
      return std::max(v, a(1));
    }
  }
  return 0.0;
}

void print(const Expression::Node& n, std::ostream& os) {
  auto bin = [&](const char* op) {
    os << '(';
    print(*n.args[0], os);
    os << ' ' << op << ' ';
    print(*n.args[1], os);
    os << ')';
  };
  switch (n.kind) {
    case Kind::number: {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, n.value);
      os << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
      return;
    }
    case Kind::var_x: os << 'x'; return;
    case Kind::var_y: os << 'y'; return;
    case Kind::pi: os << "pi"; return;
    case Kind::neg:
      os << "(-";
      print(*n.args[0], os);
      os << ')';
      return;
    case Kind::add: return bin("+");
    case Kind::sub: return bin("-");
    case Kind::mul: return bin("*");
    case Kind::div: return bin("/");
    case Kind::pow: return bin("^");
    case Kind::call:
      os << n.name << '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        print(*n.args[i], os);
      }
      os << ')';
      return;
  }
}

bool same(const Expression::Node& a, const Expression::Node& b) {
  if (a.kind != b.kind || a.name != b.name || a.args.size() != b.args.size()) return false;
  if (a.kind == Kind::number && !(a.value == b.value)) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same(*a.args[i], *b.args[i])) return false;
  return true;
}

bool constant(const Expression::Node& n) {
  if (n.kind == Kind::var_x || n.kind == Kind::var_y) return false;
  for (const auto& c : n.args)
    if (!constant(*c)) return false;
  return true;
}

}  // namespace

Expression Expression::parse(std::string_view text) { return Expression(Parser(text).parse()); }

double Expression::evaluate(double x, double y) const { return eval(*root_, x, y); }

std::vector<double> Expression::evaluate_on(const Grid& g) const {
  std::vector<double> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point p = g.point(k);
    out[k] = evaluate(p[0], p[1]);
    if (!std::isfinite(out[k])) {
      std::ostringstream os;
      os.precision(6);
      os << "expression " << to_string() << " is not finite at (" << p[0];
      if (g.dim() == 2) os << ", " << p[1];
      os << ')';
      throw ConfigError(os.str());
    }
  }
  return out;
}

std::string Expression::to_string() const {
  std::ostringstream os;
  print(*root_, os);
  return os.str();
}

bool Expression::is_constant() const { return constant(*root_); }

bool operator==(const Expression& a, const Expression& b) { return same(*a.root_, *b.root_); }

}  // namespace mixp
