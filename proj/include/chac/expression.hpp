#pragma once

#include <memory>
#include <span>
#include <string>

namespace chac {

/// Closed-form coefficient expression in (x1..xd, t).
///
/// Grammar (whitespace insignificant, `^` right-associative and binding
/// tighter than unary minus):
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | 'pi' | 'x1' | 'x2' | 'x3' | 't'
///            | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'
class Expression {
 public:
  /// Parses `text`; spatial variables beyond `dim` are rejected.
  static Expression parse(const std::string& text, int dim);

  double evaluate(std::span<const double> x, double t) const;

  const std::string& text() const noexcept { return text_; }
  bool depends_on_time() const noexcept;
  /// True when the expression references no variable at all.
  bool is_constant() const noexcept;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace chac
