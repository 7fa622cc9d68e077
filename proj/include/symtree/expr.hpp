#pragma once

// Basis-function mini-language: parsing, evaluation and printing of
// expressions over named variables.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace symtree {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifierError : public ParseError {
 public:
  UnknownIdentifierError(const std::string& token, std::size_t offset)
      : ParseError("unknown identifier '" + token + "'", offset),
        token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// Raised for sqrt of a negative, log10 of a non-positive, division by zero
// and non-finite results.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnboundVariableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op {
  kConstant,
  kVariable,
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kSqrt,
  kAbs,
  kLog10,
};

/// Immutable expression tree. Copies share nodes.
class Expression {
 public:
  static Expression constant(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::kConstant;
    n->value = v;
    return Expression(std::move(n));
  }
  static Expression variable(std::string name, std::size_t index) {
    auto n = std::make_shared<Node>();
    n->op = Op::kVariable;
    n->name = std::move(name);
    n->index = index;
    return Expression(std::move(n));
  }
  static Expression unary(Op op, Expression operand) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(operand.node_);
    return Expression(std::move(n));
  }
  static Expression binary(Op op, Expression lhs, Expression rhs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs.node_);
    n->rhs = std::move(rhs.node_);
    return Expression(std::move(n));
  }
  static Expression power(Expression base, int exponent) {
    auto n = std::make_shared<Node>();
    n->op = Op::kPow;
    n->exponent = exponent;
    n->lhs = std::move(base.node_);
    return Expression(std::move(n));
  }

  Op op() const { return node_->op; }
  double value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  std::size_t index() const { return node_->index; }
  int exponent() const { return node_->exponent; }
  Expression lhs() const { return Expression(node_->lhs); }
  Expression rhs() const { return Expression(node_->rhs); }

  bool is_constant_one() const {
    return node_->op == Op::kConstant && node_->value == 1.0;
  }
  bool is_variable() const { return node_->op == Op::kVariable; }

  /// Structural equality.
  friend bool operator==(const Expression& a, const Expression& b) {
    return equal(a.node_.get(), b.node_.get());
  }

 private:
  struct Node {
    Op op = Op::kConstant;
    double value = 0.0;
    int exponent = 0;
    std::string name;
    std::size_t index = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static bool equal(const Node* a, const Node* b) {
    if (a == b) return true;
    if (!a || !b || a->op != b->op) return false;
    switch (a->op) {
      case Op::kConstant:
        return a->value == b->value;
      case Op::kVariable:
        return a->name == b->name;
      case Op::kPow:
        return a->exponent == b->exponent && equal(a->lhs.get(), b->lhs.get());
      default:
        return equal(a->lhs.get(), b->lhs.get()) &&
               equal(a->rhs.get(), b->rhs.get());
    }
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& variables)
      : text_(text), variables_(variables) {}

  Expression parse() {
    Expression e = parse_sum();
    skip_space();
    if (pos_ != text_.size()) {
      throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'",
                       pos_);
    }
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
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
      if (pos_ >= text_.size()) {
        throw ParseError(std::string("expected '") + c + "' but input ended",
                         pos_);
      }
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = Expression::binary(Op::kAdd, lhs, parse_product());
      } else if (accept('-')) {
        lhs = Expression::binary(Op::kSub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_product() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expression::binary(Op::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = Expression::binary(Op::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_unary() {
    if (accept('-')) return Expression::unary(Op::kNeg, parse_unary());
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      bool negative = false;
      if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
        negative = text_[pos_] == '-';
        ++pos_;
      }
      const std::size_t digits = pos_;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
        ++pos_;
      }
      if (pos_ == digits) throw ParseError("expected integer exponent", start);
      int exponent = 0;
      auto [ptr, ec] =
          std::from_chars(text_.data() + digits, text_.data() + pos_, exponent);
      if (ec != std::errc()) throw ParseError("exponent out of range", start);
      return Expression::power(base, negative ? -exponent : exponent);
    }
    return base;
  }

  Expression parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) {
      throw ParseError("unexpected end of expression", pos_);
    }
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = parse_sum();
      expect(')');
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      std::string token(text_.substr(start, pos_ - start));
      const std::size_t after = pos_;
      skip_space();
      const bool call = pos_ < text_.size() && text_[pos_] == '(';
      if (call && (token == "sqrt" || token == "abs" || token == "log10")) {
        ++pos_;
        Expression arg = parse_sum();
        expect(')');
        const Op op = token == "sqrt"  ? Op::kSqrt
                      : token == "abs" ? Op::kAbs
                                       : Op::kLog10;
        return Expression::unary(op, arg);
      }
      pos_ = after;
      auto it = std::find(variables_.begin(), variables_.end(), token);
      if (it == variables_.end()) throw UnknownIdentifierError(token, start);
      return Expression::variable(
          token, static_cast<std::size_t>(it - variables_.begin()));
    }
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  Expression parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           ((text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && text_[p] >= '0' && text_[p] <= '9') {
        while (p < text_.size() && text_[p] >= '0' && text_[p] <= '9') ++p;
        pos_ = p;
      }
    }
    double v = 0.0;
    auto [ptr, ec] =
        std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      throw ParseError("malformed number", start);
    }
    return Expression::constant(v);
  }

  std::string_view text_;
  const std::vector<std::string>& variables_;
  std::size_t pos_ = 0;
};

template <typename Lookup>
double eval(const Expression& e, const Lookup& lookup) {
  switch (e.op()) {
    case Op::kConstant:
      return e.value();
    case Op::kVariable:
      return lookup(e);
    case Op::kNeg:
      return -eval(e.lhs(), lookup);
    case Op::kAdd:
      return eval(e.lhs(), lookup) + eval(e.rhs(), lookup);
    case Op::kSub:
      return eval(e.lhs(), lookup) - eval(e.rhs(), lookup);
    case Op::kMul:
      return eval(e.lhs(), lookup) * eval(e.rhs(), lookup);
    case Op::kDiv: {
      const double num = eval(e.lhs(), lookup);
      const double den = eval(e.rhs(), lookup);
      if (den == 0.0) throw DomainError("division by zero");
      return num / den;
    }
    case Op::kPow: {
      const double base = eval(e.lhs(), lookup);
      if (base == 0.0 && e.exponent() < 0) {
        throw DomainError("division by zero in negative power");
      }
      return std::pow(base, static_cast<double>(e.exponent()));
    }
    case Op::kSqrt: {
      const double arg = eval(e.lhs(), lookup);
      if (arg < 0.0) {
        throw DomainError("sqrt of negative argument " + std::to_string(arg));
      }
      return std::sqrt(arg);
    }
    case Op::kAbs:
      return std::fabs(eval(e.lhs(), lookup));
    case Op::kLog10: {
      const double arg = eval(e.lhs(), lookup);
      if (!(arg > 0.0)) {
        throw DomainError("log10 of non-positive argument " +
                          std::to_string(arg));
      }
      return std::log10(arg);
    }
  }
  throw std::logic_error("corrupt expression node");
}

inline int precedence(const Expression& e) {
  switch (e.op()) {
    case Op::kAdd:
    case Op::kSub:
      return 1;
    case Op::kMul:
    case Op::kDiv:
      return 2;
    case Op::kNeg:
      return 3;
    case Op::kPow:
      return 4;
    case Op::kConstant:
      return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    default:
      return 5;
  }
}

inline std::string format_constant(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void print(const Expression& e, int min_prec, std::string& out) {
  const int prec = precedence(e);
  const bool wrap = prec < min_prec;
  if (wrap) out += '(';
  switch (e.op()) {
    case Op::kConstant:
      out += format_constant(e.value());
      break;
    case Op::kVariable:
      out += e.name();
      break;
    case Op::kNeg:
      out += '-';
      print(e.lhs(), 3, out);
      break;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      const char* sym = e.op() == Op::kAdd   ? " + "
                        : e.op() == Op::kSub ? " - "
                        : e.op() == Op::kMul ? "*"
                                             : "/";
      print(e.lhs(), prec, out);
      out += sym;
      print(e.rhs(), prec + 1, out);
      break;
    }
    case Op::kPow:
      print(e.lhs(), 5, out);
      out += '^';
      out += std::to_string(e.exponent());
      break;
    case Op::kSqrt:
    case Op::kAbs:
    case Op::kLog10:
      out += e.op() == Op::kSqrt ? "sqrt(" : e.op() == Op::kAbs ? "abs(" : "log10(";
      print(e.lhs(), 0, out);
      out += ')';
      break;
  }
  if (wrap) out += ')';
}

}  // namespace detail

/// Parses `text` over the given variable names. Variable handles resolve to
/// positions in `variables`.
inline Expression parse(std::string_view text,
                        const std::vector<std::string>& variables) {
  return detail::Parser(text, variables).parse();
}

inline double evaluate(const Expression& e,
                       const std::map<std::string, double>& row) {
  return detail::eval(e, [&](const Expression& v) {
    auto it = row.find(v.name());
    if (it == row.end()) {
      throw UnboundVariableError("unbound variable '" + v.name() + "'");
    }
    return it->second;
  });
}

/// Evaluates against values laid out in the variable order used at parse time.
inline double evaluate(const Expression& e, std::span<const double> values) {
  const double r = detail::eval(e, [&](const Expression& v) {
    if (v.index() >= values.size()) {
      throw UnboundVariableError("unbound variable '" + v.name() + "'");
    }
    return values[v.index()];
  });
  if (!std::isfinite(r)) throw DomainError("non-finite result");
  return r;
}

/// Renders `e` in the input grammar with full-precision constants.
inline std::string to_string(const Expression& e) {
  std::string out;
  detail::print(e, 0, out);
  return out;
}

/// Collects the distinct variable names referenced by `e`.
inline void collect_variables(const Expression& e,
                              std::vector<std::string>& names) {
  switch (e.op()) {
    case Op::kConstant:
      return;
    case Op::kVariable:
      if (std::find(names.begin(), names.end(), e.name()) == names.end()) {
        names.push_back(e.name());
      }
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
      collect_variables(e.lhs(), names);
      collect_variables(e.rhs(), names);
      return;
    default:
      collect_variables(e.lhs(), names);
  }
}

enum class BasisRole { kBranching, kLeaf };

/// Ordered list of basis functions over a fixed variable universe. Index k of
/// a member never changes after construction.
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(std::vector<std::string> texts, std::vector<std::string> universe,
           BasisRole role)
      : universe_(std::move(universe)), role_(role) {
    members_.reserve(texts.size());
    for (const auto& t : texts) members_.push_back(parse(t, universe_));
    texts_.reserve(members_.size());
    for (const auto& m : members_) texts_.push_back(to_string(m));
  }

  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const Expression& operator[](std::size_t k) const { return members_[k]; }
  const std::vector<Expression>& members() const { return members_; }
  const std::vector<std::string>& texts() const { return texts_; }
  const std::vector<std::string>& universe() const { return universe_; }
  BasisRole role() const { return role_; }

  /// Index of the member that is exactly the bare variable `name`, if any.
  std::ptrdiff_t find_variable(const std::string& name) const {
    for (std::size_t k = 0; k < members_.size(); ++k) {
      if (members_[k].is_variable() && members_[k].name() == name) {
        return static_cast<std::ptrdiff_t>(k);
      }
    }
    return -1;
  }

  /// phi_k evaluated on one row given in universe order.
  double eval(std::size_t k, std::span<const double> row) const {
    return evaluate(members_[k], row);
  }

 private:
  std::vector<Expression> members_;
  std::vector<std::string> texts_;
  std::vector<std::string> universe_;
  BasisRole role_ = BasisRole::kLeaf;
};

namespace detail {

inline std::string format_sig(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

/// Polynomial degree for display ordering; sqrt, abs and log10 of anything
/// non-constant count as degree 1.
inline int display_degree(const Expression& e) {
  switch (e.op()) {
    case Op::kConstant: return 0;
    case Op::kVariable: return 1;
    case Op::kNeg: return display_degree(e.lhs());
    case Op::kAdd:
    case Op::kSub: return std::max(display_degree(e.lhs()), display_degree(e.rhs()));
    case Op::kMul: return display_degree(e.lhs()) + display_degree(e.rhs());
    case Op::kDiv: return display_degree(e.lhs()) - display_degree(e.rhs());
    case Op::kPow: return display_degree(e.lhs()) * e.exponent();
    case Op::kSqrt:
    case Op::kAbs:
    case Op::kLog10: return display_degree(e.lhs()) > 0 ? 1 : 0;
  }
  return 0;
}

}  // namespace detail

/// Renders sum_k c_k * phi_k, dropping |c_k| <= tol and folding signs, e.g.
/// "3.4*log10(M) - 11.28". Terms appear by decreasing degree, constants last,
/// otherwise in basis order.
inline std::string print_combination(std::span<const double> coeffs,
                                     const BasisSet& basis, double tol,
                                     int digits = 4) {
  if (coeffs.size() != basis.size()) {
    throw std::invalid_argument("coefficient count " +
                                std::to_string(coeffs.size()) +
                                " does not match basis size " +
                                std::to_string(basis.size()));
  }
  std::vector<std::size_t> order(coeffs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> degree;
  for (std::size_t k = 0; k < basis.size(); ++k) degree.push_back(detail::display_degree(basis[k]));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  std::string out;
  for (const std::size_t k : order) {
    const double c = coeffs[k];
    if (!(std::fabs(c) > tol)) continue;
    const bool negative = c < 0.0;
    if (out.empty()) {
      if (negative) out += '-';
    } else {
      out += negative ? " - " : " + ";
    }
    const std::string mag = detail::format_sig(std::fabs(c), digits);
    const Expression& phi = basis[k];
    if (phi.is_constant_one()) {
      out += mag;
      continue;
    }
    if (mag == "1") {
      // Unit coefficient: the term is just the basis function.
      std::string body;
      detail::print(phi, negative ? 2 : 1, body);
      out += body;
    } else {
      out += mag;
      out += '*';
      std::string body;
      detail::print(phi, 3, body);
      out += body;
    }
  }
  return out.empty() ? "0" : out;
}

}  // namespace symtree
