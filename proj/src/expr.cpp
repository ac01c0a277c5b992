#include "phicyc/expr.hpp"

#include "phicyc/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace phicyc {

struct Expr::Node {
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh, Atan };

  Op op = Op::Const;
  double value = 0.0;
  int var = -1;
  Fn fn = Fn::Sin;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Node = Expr::Node;

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Node::Op::Const;
  n->value = v;
  return n;
}

NodePtr make_binary(Node::Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

class Parser {
 public:
  Parser(const std::string& src, const std::vector<std::string>& vars,
         const std::map<std::string, double>& consts)
      : src_(src), vars_(vars), consts_(consts) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_ws();
    if (pos_ != src_.size()) error("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::Config,
         "expression \"" + src_ + "\" column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Node::Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(Node::Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Node::Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary(Node::Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  // Unary minus binds looser than ^ so that -x^2 == -(x^2).
  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->op = Node::Op::Neg;
      n->lhs = unary();
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make_binary(Node::Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) error("unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      if (!accept(')')) error("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) error("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name = src_.substr(start, pos_ - start);
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        ++pos_;
        auto n = std::make_shared<Node>();
        n->op = Node::Op::Call;
        n->fn = function(name);
        n->lhs = expression();
        if (!accept(')')) error("expected ')' after argument of " + name);
        return n;
      }
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          auto n = std::make_shared<Node>();
          n->op = Node::Op::Var;
          n->var = static_cast<int>(i);
          return n;
        }
      }
      if (auto it = consts_.find(name); it != consts_.end()) return make_const(it->second);
      if (name == "pi") return make_const(std::numbers::pi);
      pos_ = start;
      error("unknown identifier '" + name + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  Node::Fn function(const std::string& name) {
    if (name == "sin") return Node::Fn::Sin;
    if (name == "cos") return Node::Fn::Cos;
    if (name == "tan") return Node::Fn::Tan;
    if (name == "exp") return Node::Fn::Exp;
    if (name == "log") return Node::Fn::Log;
    if (name == "sqrt") return Node::Fn::Sqrt;
    if (name == "abs") return Node::Fn::Abs;
    if (name == "tanh") return Node::Fn::Tanh;
    if (name == "arctan" || name == "atan") return Node::Fn::Atan;
    error("unknown function '" + name + "'");
  }

  const std::string& src_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& consts_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, std::span<const double> v) {
  switch (n.op) {
    case Node::Op::Const: return n.value;
    case Node::Op::Var: return v[static_cast<std::size_t>(n.var)];
    case Node::Op::Neg: return -eval_node(*n.lhs, v);
    case Node::Op::Add: return eval_node(*n.lhs, v) + eval_node(*n.rhs, v);
    case Node::Op::Sub: return eval_node(*n.lhs, v) - eval_node(*n.rhs, v);
    case Node::Op::Mul: return eval_node(*n.lhs, v) * eval_node(*n.rhs, v);
    case Node::Op::Div: return eval_node(*n.lhs, v) / eval_node(*n.rhs, v);
    case Node::Op::Pow: {
      const double b = eval_node(*n.lhs, v);
      const double e = eval_node(*n.rhs, v);
      // Integer exponents of negative bases are common (s^3); std::pow handles
      // them exactly when the exponent is integral.
      return std::pow(b, e);
    }
    case Node::Op::Call: {
      const double a = eval_node(*n.lhs, v);
      switch (n.fn) {
        case Node::Fn::Sin: return std::sin(a);
        case Node::Fn::Cos: return std::cos(a);
        case Node::Fn::Tan: return std::tan(a);
        case Node::Fn::Exp: return std::exp(a);
        case Node::Fn::Log: return std::log(a);
        case Node::Fn::Sqrt: return std::sqrt(a);
        case Node::Fn::Abs: return std::abs(a);
        case Node::Fn::Tanh: return std::tanh(a);
        case Node::Fn::Atan: return std::atan(a);
      }
    }
  }
  return 0.0;
}

}  // namespace

Expr Expr::parse(const std::string& source, const std::vector<std::string>& variables,
                 const std::map<std::string, double>& constants) {
  Parser p(source, variables, constants);
  Expr e;
  e.source_ = source;
  e.root_ = p.parse();
  return e;
}

double Expr::eval(std::span<const double> values) const {
  if (!root_) fail(ErrorKind::InvalidArgument, "evaluating an empty expression");
  return eval_node(*root_, values);
}

}  // namespace phicyc
