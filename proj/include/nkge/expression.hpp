#pragma once

#include <complex>
#include <memory>
#include <string>
#include <string_view>

namespace nkge {

/// Complex-valued closed form in x and y, parsed from text such as
/// "x^2*(x-1)^2 + 3" or "3*i*cos(2*pi*x)".
///
/// Grammar: numbers, the variables x and y, the constants pi, e and i,
/// binary + - * / and ^ (or **, right associative), unary minus, and the
/// functions sin cos tan exp log sqrt sinh cosh tanh abs conj re im.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text);

  std::complex<double> evaluate(double x, double y = 0.0) const;
  const std::string& text() const noexcept { return text_; }

 private:
  Expression(std::string text, std::shared_ptr<const Node> root);

  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace nkge
