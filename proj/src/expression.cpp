#include "nkge/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "nkge/errors.hpp"

namespace nkge {

using Complex = std::complex<double>;

struct Expression::Node {
  enum class Kind { Constant, X, Y, Unary, Binary, Call };
  Kind kind = Kind::Constant;
  Complex value{};
  char op = 0;
  Complex (*function)(const Complex&) = nullptr;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

// Integer exponents are expanded by repeated squaring so that real data stays real.
Complex power(const Complex& base, const Complex& exponent) {
  if (exponent.imag() == 0.0) {
    const double e = exponent.real();
    if (e == std::floor(e) && std::abs(e) <= 64.0) {
      auto n = static_cast<long>(std::abs(e));
      Complex result = 1.0;
      Complex b = base;
      while (n > 0) {
        if (n & 1) result *= b;
        b *= b;
        n >>= 1;
      }
      return e < 0 ? 1.0 / result : result;
    }
    if (base.imag() == 0.0 && base.real() >= 0.0) return std::pow(base.real(), e);
  }
  return std::pow(base, exponent);
}

struct FunctionEntry {
  std::string_view name;
  Complex (*fn)(const Complex&);
};

const FunctionEntry kFunctions[] = {
    {"sin", [](const Complex& z) { return z.imag() == 0.0 ? Complex(std::sin(z.real())) : std::sin(z); }},
    {"cos", [](const Complex& z) { return z.imag() == 0.0 ? Complex(std::cos(z.real())) : std::cos(z); }},
    {"tan", [](const Complex& z) { return z.imag() == 0.0 ? Complex(std::tan(z.real())) : std::tan(z); }},
    {"exp", [](const Complex& z) { return z.imag() == 0.0 ? Complex(std::exp(z.real())) : std::exp(z); }},
    {"log", [](const Complex& z) { return std::log(z); }},
    {"sqrt", [](const Complex& z) { return std::sqrt(z); }},
    {"sinh", [](const Complex& z) { return std::sinh(z); }},
    {"cosh", [](const Complex& z) { return std::cosh(z); }},
    {"tanh", [](const Complex& z) { return std::tanh(z); }},
    {"abs", [](const Complex& z) { return Complex(std::abs(z)); }},
    {"conj", [](const Complex& z) { return std::conj(z); }},
    {"re", [](const Complex& z) { return Complex(z.real()); }},
    {"im", [](const Complex& z) { return Complex(z.imag()); }},
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail(fmt::format("unexpected '{}'", text_[pos_]));
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError(fmt::format("expression error at column {}: {}", pos_ + 1, what), pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept("+")) {
        lhs = binary('+', lhs, parse_product());
      } else if (accept("-")) {
        lhs = binary('-', lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      skip_space();
      if (text_.substr(pos_, 2) == "**") return lhs;
      if (accept("*")) {
        lhs = binary('*', lhs, parse_unary());
      } else if (accept("/")) {
        lhs = binary('/', lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept("-")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Unary;
      n->op = '-';
      n->lhs = parse_unary();
      return n;
    }
    if (accept("+")) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept("**") || accept("^")) return binary('^', base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail(fmt::format("unexpected '{}'", c));
  }

  NodePtr parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    auto n = std::make_shared<Node>();
    if (name == "x") {
      n->kind = Node::Kind::X;
    } else if (name == "y") {
      n->kind = Node::Kind::Y;
    } else if (name == "i") {
      n->value = Complex(0.0, 1.0);
    } else if (name == "pi") {
      n->value = std::numbers::pi;
    } else if (name == "e") {
      n->value = std::numbers::e;
    } else {
      for (const auto& entry : kFunctions) {
        if (entry.name == name) {
          if (!accept("(")) fail(fmt::format("expected '(' after {}", name));
          n->kind = Node::Kind::Call;
          n->function = entry.fn;
          n->lhs = parse_sum();
          if (!accept(")")) fail("expected ')'");
          return n;
        }
      }
      pos_ = start;
      fail(fmt::format("unknown identifier '{}'", name));
    }
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Complex eval(const Node& n, double x, double y) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::X:
      return x;
    case Node::Kind::Y:
      return y;
    case Node::Kind::Unary:
      return -eval(*n.lhs, x, y);
    case Node::Kind::Call:
      return n.function(eval(*n.lhs, x, y));
    case Node::Kind::Binary: {
      const Complex a = eval(*n.lhs, x, y);
      const Complex b = eval(*n.rhs, x, y);
      switch (n.op) {
        case '+':
          return a + b;
        case '-':
          return a - b;
        case '*':
          return a * b;
        case '/':
          return a / b;
        default:
          return power(a, b);
      }
    }
  }
  return {};
}

}  // namespace

Expression::Expression(std::string text, std::shared_ptr<const Node> root)
    : text_(std::move(text)), root_(std::move(root)) {}

Expression Expression::parse(std::string_view text) {
  Parser parser(text);
  return Expression(std::string(text), parser.parse());
}

std::complex<double> Expression::evaluate(double x, double y) const { return eval(*root_, x, y); }

}  // namespace nkge
