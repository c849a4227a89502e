#include "modgrad/expr.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <string>

#include "modgrad/dual.hpp"
#include "modgrad/errors.hpp"

namespace modgrad {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, std::size_t dimension, bool allow_t)
      : src_(src), dimension_(dimension), allow_t_(allow_t) {}

  Expression run() {
    if (src_.find_first_not_of(" \t\r\n") == std::string_view::npos)
      throw ParseError("empty expression", 0);
    out_.dimension_ = dimension_;
    out_.source_ = std::string(src_);
    parse_sum();
    skip_ws();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    std::set<std::size_t> vars;
    for (const auto& n : out_.nodes_) {
      if (n.op == Expression::Op::Variable) vars.insert(n.index);
      if (n.op == Expression::Op::Time) out_.uses_time_ = true;
    }
    out_.arity_ = vars.size();
    return std::move(out_);
  }

 private:
  using Op = Expression::Op;

  std::size_t push(Expression::Node n) {
    out_.nodes_.push_back(n);
    return out_.nodes_.size() - 1;
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void unexpected() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
  }

  std::size_t parse_sum() {
    std::size_t lhs = parse_product();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = push({.op = Op::Add, .lhs = lhs, .rhs = parse_product(), .offset = at});
      } else if (accept('-')) {
        lhs = push({.op = Op::Sub, .lhs = lhs, .rhs = parse_product(), .offset = at});
      } else {
        return lhs;
      }
    }
  }

  std::size_t parse_product() {
    std::size_t lhs = parse_unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = push({.op = Op::Mul, .lhs = lhs, .rhs = parse_unary(), .offset = at});
      } else if (accept('/')) {
        lhs = push({.op = Op::Div, .lhs = lhs, .rhs = parse_unary(), .offset = at});
      } else {
        return lhs;
      }
    }
  }

  std::size_t parse_unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) return push({.op = Op::Neg, .lhs = parse_unary(), .offset = at});
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  // An exponent that is an integer literal (optionally negated) becomes PowInt.
  std::optional<long long> integer_exponent(std::size_t node) const {
    const auto& n = out_.nodes_[node];
    if (n.op == Op::Constant) {
      if (std::floor(n.value) == n.value && std::abs(n.value) <= 1e6) return static_cast<long long>(n.value);
      return std::nullopt;
    }
    if (n.op == Op::Neg) {
      if (auto k = integer_exponent(n.lhs)) return -*k;
    }
    return std::nullopt;
  }

  std::size_t parse_power() {
    const std::size_t base = parse_primary();
    skip_ws();
    const std::size_t at = pos_;
    if (!accept('^')) return base;
    const std::size_t mark = out_.nodes_.size();
    const std::size_t exponent = parse_unary();
    if (auto k = integer_exponent(exponent)) {
      out_.nodes_.resize(mark);  // literal exponent folded into the node
      return push({.op = Op::PowInt, .exponent = *k, .lhs = base, .offset = at});
    }
    return push({.op = Op::PowReal, .lhs = base, .rhs = exponent, .offset = at});
  }

  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  std::size_t parse_primary() {
    skip_ws();
    const std::size_t at = pos_;
    if (pos_ >= src_.size()) unexpected();
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      const std::size_t inner = parse_sum();
      if (!accept(')')) unexpected();
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (is_ident_start(c)) {
      std::size_t end = pos_;
      while (end < src_.size() && is_ident_char(src_[end])) ++end;
      const std::string_view ident = src_.substr(pos_, end - pos_);
      pos_ = end;
      if (ident == "t") {
        if (!allow_t_) throw ParseError("unknown identifier 't' (time not allowed here)", at);
        return push({.op = Op::Time, .offset = at});
      }
      if (ident.size() >= 2 && ident[0] == 'x' && ident.find_first_not_of("0123456789", 1) == std::string_view::npos) {
        std::size_t k = 0;
        std::from_chars(ident.data() + 1, ident.data() + ident.size(), k);
        if (k < 1 || k > dimension_)
          throw ParseError("variable index out of range: '" + std::string(ident) + "' (dimension " +
                               std::to_string(dimension_) + ")",
                           at);
        return push({.op = Op::Variable, .index = k - 1, .offset = at});
      }
      Op fn;
      if (ident == "exp") fn = Op::Exp;
      else if (ident == "ln") fn = Op::Ln;
      else if (ident == "sin") fn = Op::Sin;
      else if (ident == "cos") fn = Op::Cos;
      else if (ident == "sqrt") fn = Op::Sqrt;
      else throw ParseError("unknown identifier '" + std::string(ident) + "'", at);
      if (!accept('(')) unexpected();
      const std::size_t arg = parse_sum();
      if (!accept(')')) unexpected();
      return push({.op = fn, .lhs = arg, .offset = at});
    }
    unexpected();
  }

  std::size_t parse_number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      const std::size_t start = end;
      while (end < src_.size() && src_[end] >= '0' && src_[end] <= '9') ++end;
      return end - start;
    };
    std::size_t mantissa = digits();
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      mantissa += digits();
    }
    if (mantissa == 0) throw ParseError("malformed number", at);
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      ++end;
      if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
      if (digits() == 0) throw ParseError("malformed exponent in number", at);
    }
    if (end < src_.size() && is_ident_start(src_[end]))
      throw ParseError("unexpected identifier after number (no implicit multiplication)", end);
    double value = 0.0;
    const auto res = std::from_chars(src_.data() + at, src_.data() + end, value);
    if (res.ec != std::errc()) throw ParseError("malformed number", at);
    pos_ = end;
    return push({.op = Op::Constant, .value = value, .offset = at});
  }

  std::string_view src_;
  std::size_t dimension_;
  bool allow_t_;
  std::size_t pos_ = 0;
  Expression out_;
};

Expression Expression::parse(std::string_view source, std::size_t dimension, bool allow_t) {
  if (dimension == 0 && !allow_t) throw DimensionError("Expression::parse: dimension must be >= 1");
  return ExpressionParser(source, dimension, allow_t).run();
}

namespace {

std::string describe(const Expression::Node& n) { return "node at offset " + std::to_string(n.offset); }

template <typename T>
T int_power(const T& base, long long k) {
  T acc(1.0);
  for (long long i = 0; i < k; ++i) acc = acc * base;
  return acc;
}

}  // namespace

template <typename T>
T Expression::evaluate(std::size_t idx, std::span<const T> x, const T* t) const {
  const Node& n = nodes_[idx];
  switch (n.op) {
    case Op::Constant:
      return T(n.value);
    case Op::Variable:
      return x[n.index];
    case Op::Time:
      return *t;
    case Op::Add:
      return evaluate(n.lhs, x, t) + evaluate(n.rhs, x, t);
    case Op::Sub:
      return evaluate(n.lhs, x, t) - evaluate(n.rhs, x, t);
    case Op::Mul:
      return evaluate(n.lhs, x, t) * evaluate(n.rhs, x, t);
    case Op::Div: {
      const T den = evaluate(n.rhs, x, t);
      if (primal(den) == 0.0) throw DomainError("division by zero (" + describe(n) + ")");
      return evaluate(n.lhs, x, t) / den;
    }
    case Op::Neg:
      return -evaluate(n.lhs, x, t);
    case Op::PowInt: {
      const T base = evaluate(n.lhs, x, t);
      if (n.exponent >= 0) return int_power(base, n.exponent);
      const T p = int_power(base, -n.exponent);
      if (primal(p) == 0.0) throw DomainError("zero raised to a negative power (" + describe(n) + ")");
      return T(1.0) / p;
    }
    case Op::PowReal: {
      const T base = evaluate(n.lhs, x, t);
      if (!(primal(base) > 0.0))
        throw DomainError("real power of a non-positive base (" + describe(n) + ")");
      using std::exp;
      using std::log;
      return exp(evaluate(n.rhs, x, t) * log(base));
    }
    case Op::Exp: {
      using std::exp;
      return exp(evaluate(n.lhs, x, t));
    }
    case Op::Ln: {
      const T a = evaluate(n.lhs, x, t);
      if (!(primal(a) > 0.0)) throw DomainError("ln of a non-positive value (" + describe(n) + ")");
      using std::log;
      return log(a);
    }
    case Op::Sin: {
      using std::sin;
      return sin(evaluate(n.lhs, x, t));
    }
    case Op::Cos: {
      using std::cos;
      return cos(evaluate(n.lhs, x, t));
    }
    case Op::Sqrt: {
      const T a = evaluate(n.lhs, x, t);
      if (primal(a) < 0.0) throw DomainError("sqrt of a negative value (" + describe(n) + ")");
      if constexpr (!std::is_same_v<T, double>) {
        if (primal(a) == 0.0) throw DomainError("sqrt is not differentiable at 0 (" + describe(n) + ")");
      }
      using std::sqrt;
      return sqrt(a);
    }
  }
  throw DomainError("corrupt expression node");
}

void Expression::check_call(std::span<const double> point, const std::optional<double>& time) const {
  if (point.size() != dimension_)
    throw DimensionError("expression of dimension " + std::to_string(dimension_) + " evaluated at a point of length " +
                         std::to_string(point.size()));
  if (uses_time_ && !time) throw DomainError("expression references t but no time was supplied");
}

double Expression::eval(std::span<const double> point, std::optional<double> time) const {
  check_call(point, time);
  const double tv = time.value_or(0.0);
  const double r = evaluate<double>(nodes_.size() - 1, point, &tv);
  if (!std::isfinite(r)) throw DomainError("non-finite value of expression '" + source_ + "'");
  return r;
}

Vec Expression::grad(std::span<const double> point, std::optional<double> time) const {
  check_call(point, time);
  using D = Dual<double>;
  const std::size_t n = dimension_;
  std::vector<D> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = D(point[i], 0.0);
  const D tv(time.value_or(0.0), 0.0);
  Vec g(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i].d = 1.0;
    g[i] = evaluate<D>(nodes_.size() - 1, x, &tv).d;
    x[i].d = 0.0;
    if (!std::isfinite(g[i])) throw DomainError("non-finite gradient of expression '" + source_ + "'");
  }
  return g;
}

SymMatrix Expression::hessian(std::span<const double> point, std::optional<double> time) const {
  check_call(point, time);
  using D = Dual<double>;
  using DD = Dual<D>;
  const std::size_t n = dimension_;
  std::vector<DD> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = DD(D(point[i], 0.0), D(0.0, 0.0));
  const DD tv(D(time.value_or(0.0), 0.0), D(0.0, 0.0));
  SymMatrix h(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i].d.v = 1.0;
    for (std::size_t j = i; j < n; ++j) {
      x[j].v.d = 1.0;
      const double hij = evaluate<DD>(nodes_.size() - 1, x, &tv).d.d;
      x[j].v.d = 0.0;
      if (!std::isfinite(hij)) throw DomainError("non-finite Hessian of expression '" + source_ + "'");
      h.set(i, j, hij);
    }
    x[i].d.v = 0.0;
  }
  return h;
}

namespace {

std::string number_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string print(std::span<const Expression::Node> nodes, std::size_t idx) {
  using Op = Expression::Op;
  const auto& n = nodes[idx];
  auto bin = [&](const char* op) { return "(" + print(nodes, n.lhs) + " " + op + " " + print(nodes, n.rhs) + ")"; };
  auto fn = [&](const char* name) { return std::string(name) + "(" + print(nodes, n.lhs) + ")"; };
  switch (n.op) {
    case Op::Constant: return number_text(n.value);
    case Op::Variable: return "x" + std::to_string(n.index + 1);
    case Op::Time: return "t";
    case Op::Add: return bin("+");
    case Op::Sub: return bin("-");
    case Op::Mul: return bin("*");
    case Op::Div: return bin("/");
    case Op::Neg: return "(-" + print(nodes, n.lhs) + ")";
    case Op::PowInt: return "(" + print(nodes, n.lhs) + "^" + std::to_string(n.exponent) + ")";
    case Op::PowReal: return "(" + print(nodes, n.lhs) + "^(" + print(nodes, n.rhs) + "))";
    case Op::Exp: return fn("exp");
    case Op::Ln: return fn("ln");
    case Op::Sin: return fn("sin");
    case Op::Cos: return fn("cos");
    case Op::Sqrt: return fn("sqrt");
  }
  return "?";
}

}  // namespace

std::string Expression::to_string() const { return print(nodes_, nodes_.size() - 1); }

}  // namespace modgrad
