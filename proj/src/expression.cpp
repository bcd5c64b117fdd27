#include "chac/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "chac/error.hpp"

namespace chac {

struct Expression::Node {
  enum class Op { number, var_x, var_t, neg, add, sub, mul, div, pow, sin, cos, exp };
  Op op;
  double value = 0.0;
  int axis = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(std::span<const double> x, double t) const {
    switch (op) {
      case Op::number: return value;
      case Op::var_x: return x[static_cast<std::size_t>(axis)];
      case Op::var_t: return t;
      case Op::neg: return -lhs->eval(x, t);
      case Op::add: return lhs->eval(x, t) + rhs->eval(x, t);
      case Op::sub: return lhs->eval(x, t) - rhs->eval(x, t);
      case Op::mul: return lhs->eval(x, t) * rhs->eval(x, t);
      case Op::div: return lhs->eval(x, t) / rhs->eval(x, t);
      case Op::pow: return std::pow(lhs->eval(x, t), rhs->eval(x, t));
      case Op::sin: return std::sin(lhs->eval(x, t));
      case Op::cos: return std::cos(lhs->eval(x, t));
      case Op::exp: return std::exp(lhs->eval(x, t));
    }
    return 0.0;
  }

  bool uses(Op which) const {
    if (op == which) return true;
    return (lhs && lhs->uses(which)) || (rhs && rhs->uses(which));
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr leaf(Node::Op op, double value = 0.0, int axis = 0) {
  return std::make_shared<const Node>(Node{op, value, axis, nullptr, nullptr});
}

NodePtr unary(Node::Op op, NodePtr a) {
  return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(a), nullptr});
}

NodePtr binary(Node::Op op, NodePtr a, NodePtr b) {
  return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(a), std::move(b)});
}

class Parser {
 public:
  Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidInput("expression \"" + s_ + "\" at column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = binary(Node::Op::add, lhs, term());
      else if (accept('-')) lhs = binary(Node::Op::sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = signed_factor();
    for (;;) {
      if (accept('*')) lhs = binary(Node::Op::mul, lhs, signed_factor());
      else if (accept('/')) lhs = binary(Node::Op::div, lhs, signed_factor());
      else return lhs;
    }
  }

  NodePtr signed_factor() {
    if (accept('-')) return unary(Node::Op::neg, signed_factor());
    if (accept('+')) return signed_factor();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return binary(Node::Op::pow, base, signed_factor());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return leaf(Node::Op::number, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string word = s_.substr(start, pos_ - start);
      if (word == "pi") return leaf(Node::Op::number, std::numbers::pi);
      if (word == "t") return leaf(Node::Op::var_t);
      if (word.size() == 2 && word[0] == 'x' && word[1] >= '1' && word[1] <= '3') {
        const int axis = word[1] - '1';
        if (axis >= dim_) fail("variable " + word + " exceeds dimension " + std::to_string(dim_));
        return leaf(Node::Op::var_x, 0.0, axis);
      }
      Node::Op fn;
      if (word == "sin") fn = Node::Op::sin;
      else if (word == "cos") fn = Node::Op::cos;
      else if (word == "exp") fn = Node::Op::exp;
      else fail("unknown identifier '" + word + "'");
      if (!accept('(')) fail("expected '(' after " + word);
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return unary(fn, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
  if (dim < 1 || dim > 3) throw InvalidInput("expression dimension must be 1, 2 or 3");
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text, dim).parse();
  return e;
}

double Expression::evaluate(std::span<const double> x, double t) const { return root_->eval(x, t); }

bool Expression::depends_on_time() const noexcept { return root_->uses(Node::Op::var_t); }

bool Expression::is_constant() const noexcept {
  return !root_->uses(Node::Op::var_t) && !root_->uses(Node::Op::var_x);
}

}  // namespace chac
