#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "modgrad/linalg.hpp"

namespace modgrad {

/// A parsed scalar expression over x1..xn and, optionally, t.
///
/// Grammar (highest precedence first):
///   primary  := number | xK | t | fn '(' sum ')' | '(' sum ')'
///   power    := primary ['^' unary]          right-associative
///   unary    := ('-' | '+') unary | power
///   product  := unary (('*' | '/') unary)*
///   sum      := product (('+' | '-') product)*
/// with fn one of exp, ln, sin, cos, sqrt. Numbers use decimal or scientific
/// notation. There is no implicit multiplication.
///
/// Expressions are immutable; evaluation is pure and thread-safe.
class Expression {
 public:
  enum class Op { Constant, Variable, Time, Add, Sub, Mul, Div, Neg, PowInt, PowReal, Exp, Ln, Sin, Cos, Sqrt };

  struct Node {
    Op op;
    double value = 0.0;       // Constant
    std::size_t index = 0;    // Variable (0-based)
    long long exponent = 0;   // PowInt
    std::size_t lhs = 0, rhs = 0;
    std::size_t offset = 0;   // source position, for diagnostics
  };

  /// Parses `source`. A dimension of 0 is allowed for expressions in t only.
  static Expression parse(std::string_view source, std::size_t dimension, bool allow_t);

  double eval(std::span<const double> point, std::optional<double> time = std::nullopt) const;
  Vec grad(std::span<const double> point, std::optional<double> time = std::nullopt) const;
  SymMatrix hessian(std::span<const double> point, std::optional<double> time = std::nullopt) const;

  /// Fully parenthesized source text that re-parses to an equivalent tree.
  std::string to_string() const;

  std::size_t dimension() const noexcept { return dimension_; }
  bool uses_time() const noexcept { return uses_time_; }
  /// Number of distinct variables referenced.
  std::size_t arity() const noexcept { return arity_; }
  const std::string& source() const noexcept { return source_; }
  std::span<const Node> nodes() const noexcept { return nodes_; }

 private:
  Expression() = default;

  std::vector<Node> nodes_;  // children precede parents; root is last
  std::size_t dimension_ = 0;
  std::size_t arity_ = 0;
  bool uses_time_ = false;
  std::string source_;

  template <typename T>
  T evaluate(std::size_t node, std::span<const T> point, const T* time) const;
  void check_call(std::span<const double> point, const std::optional<double>& time) const;

  friend class ExpressionParser;
};

}  // namespace modgrad
