#pragma once

// Arithmetic expressions over the coordinates x, y for source and exponent
// fields. Standard precedence, left-associative + - * /, right-associative ^,
// unary minus binding looser than ^ (so -x^2 = -(x^2)).

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mixp/grid.hpp"

namespace mixp {

class Expression {
 public:
  enum class Kind { number, var_x, var_y, pi, neg, add, sub, mul, div, pow, call };

  /// Throws ConfigError with the 1-based line and column of the offending token.
  static Expression parse(std::string_view text);

  double evaluate(double x, double y = 0.0) const;
  /// Values at every interior node; throws ConfigError if one is not finite.
  std::vector<double> evaluate_on(const Grid& g) const;
  /// Fully parenthesized form that parses back to the same tree.
  std::string to_string() const;
  /// True when no coordinate occurs.
  bool is_constant() const;

  friend bool operator==(const Expression& a, const Expression& b);

  struct Node {
    Kind kind = Kind::number;
    double value = 0.0;
    std::string name;  ///< function name for calls
    std::vector<std::shared_ptr<const Node>> args;
  };
  const Node& root() const { return *root_; }

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace mixp
