#include "oscikg/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace oscikg {

enum class Op { Const, VarX, VarY, VarT, Neg, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Sqrt, Log, Abs };

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Exp: return std::exp(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Sqrt: return std::sqrt(a);
    case Op::Log: return std::log(a);
    case Op::Abs: return std::abs(a);
    default: return a;
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: {
      // integer exponents are common (x^2) and std::pow is slow for them
      if (b == 2.0) return a * a;
      if (b == 3.0) return a * a * a;
      if (b == 4.0) {
        const double s = a * a;
        return s * s;
      }
      return std::pow(a, b);
    }
    default: return 0.0;
  }
}

bool is_unary(Op op) {
  return op == Op::Neg || op == Op::Exp || op == Op::Sin || op == Op::Cos || op == Op::Sqrt ||
         op == Op::Log || op == Op::Abs;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr parse() {
    auto n = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExprError("expression '" + src_ + "': " + what + " at column " + std::to_string(pos_ + 1));
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

  NodePtr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = make_node(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (pos_ + 1 < src_.size() && src_[pos_] == '*' && src_[pos_ + 1] == '*') return lhs;
      if (accept('*')) {
        lhs = make_node(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_node(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  // unary minus binds looser than '^', so -x^2 == -(x^2)
  NodePtr parse_unary() {
    if (accept('-')) return make_node(Op::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  bool accept_pow() {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '^') {
      ++pos_;
      return true;
    }
    if (pos_ + 1 < src_.size() && src_[pos_] == '*' && src_[pos_ + 1] == '*') {
      pos_ += 2;
      return true;
    }
    return false;
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept_pow()) return make_node(Op::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return make_const(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    if (name == "x") return make_node(Op::VarX, nullptr);
    if (name == "y") return make_node(Op::VarY, nullptr);
    if (name == "t") return make_node(Op::VarT, nullptr);
    if (name == "pi") return make_const(std::numbers::pi);

    Op fn;
    if (name == "exp") fn = Op::Exp;
    else if (name == "sin") fn = Op::Sin;
    else if (name == "cos") fn = Op::Cos;
    else if (name == "sqrt") fn = Op::Sqrt;
    else if (name == "log") fn = Op::Log;
    else if (name == "abs") fn = Op::Abs;
    else {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    if (!accept('(')) fail("expected '(' after " + name);
    auto arg = parse_sum();
    if (!accept(')')) fail("expected ')'");
    return make_node(fn, arg);
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

NodePtr fold(const NodePtr& n) {
  if (!n || n->op == Op::Const || n->op == Op::VarX || n->op == Op::VarY || n->op == Op::VarT)
    return n;
  auto lhs = fold(n->lhs);
  auto rhs = n->rhs ? fold(n->rhs) : nullptr;
  if (is_unary(n->op)) {
    if (lhs->op == Op::Const) return make_const(apply_unary(n->op, lhs->value));
    return make_node(n->op, lhs);
  }
  if (lhs->op == Op::Const && rhs->op == Op::Const)
    return make_const(apply_binary(n->op, lhs->value, rhs->value));
  return make_node(n->op, lhs, rhs);
}

double eval_node(const Expr::Node& n, double x, double y, double t) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarX: return x;
    case Op::VarY: return y;
    case Op::VarT: return t;
    default: break;
  }
  const double a = eval_node(*n.lhs, x, y, t);
  if (is_unary(n.op)) return apply_unary(n.op, a);
  return apply_binary(n.op, a, eval_node(*n.rhs, x, y, t));
}

// Column evaluation: one pass per tree node over the whole point set.
void eval_node_many(const Expr::Node& n, std::span<const double> xs, std::span<const double> ys,
                    double t, std::span<double> out) {
  const std::size_t count = out.size();
  switch (n.op) {
    case Op::Const:
      std::fill(out.begin(), out.end(), n.value);
      return;
    case Op::VarX:
      std::copy(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(count), out.begin());
      return;
    case Op::VarY:
      if (ys.empty()) std::fill(out.begin(), out.end(), 0.0);
      else std::copy(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(count), out.begin());
      return;
    case Op::VarT:
      std::fill(out.begin(), out.end(), t);
      return;
    default: break;
  }
  eval_node_many(*n.lhs, xs, ys, t, out);
  if (is_unary(n.op)) {
    for (auto& v : out) v = apply_unary(n.op, v);
    return;
  }
  if (n.rhs->op == Op::Const) {
    const double b = n.rhs->value;
    for (auto& v : out) v = apply_binary(n.op, v, b);
    return;
  }
  std::vector<double> rhs(count);
  eval_node_many(*n.rhs, xs, ys, t, rhs);
  for (std::size_t i = 0; i < count; ++i) out[i] = apply_binary(n.op, out[i], rhs[i]);
}

bool depends_on(const Expr::Node& n, Op var) {
  if (n.op == var) return true;
  if (n.lhs && depends_on(*n.lhs, var)) return true;
  if (n.rhs && depends_on(*n.rhs, var)) return true;
  return false;
}

std::string print(const Expr::Node& n) {
  switch (n.op) {
    case Op::Const: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      return buf;
    }
    case Op::VarX: return "x";
    case Op::VarY: return "y";
    case Op::VarT: return "t";
    case Op::Neg: return "(-" + print(*n.lhs) + ")";
    case Op::Exp: return "exp(" + print(*n.lhs) + ")";
    case Op::Sin: return "sin(" + print(*n.lhs) + ")";
    case Op::Cos: return "cos(" + print(*n.lhs) + ")";
    case Op::Sqrt: return "sqrt(" + print(*n.lhs) + ")";
    case Op::Log: return "log(" + print(*n.lhs) + ")";
    case Op::Abs: return "abs(" + print(*n.lhs) + ")";
    case Op::Add: return "(" + print(*n.lhs) + "+" + print(*n.rhs) + ")";
    case Op::Sub: return "(" + print(*n.lhs) + "-" + print(*n.rhs) + ")";
    case Op::Mul: return "(" + print(*n.lhs) + "*" + print(*n.rhs) + ")";
    case Op::Div: return "(" + print(*n.lhs) + "/" + print(*n.rhs) + ")";
    case Op::Pow: return "(" + print(*n.lhs) + "^" + print(*n.rhs) + ")";
  }
  return {};
}

}  // namespace

Expr::Expr() : root_(make_const(0.0)), source_("0") {}

Expr::Expr(const std::string& source) : source_(source) {
  Parser parser(source_);
  root_ = fold(parser.parse());
}

Expr Expr::constant(double value) {
  Expr e;
  e.root_ = make_const(value);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  e.source_ = buf;
  return e;
}

Expr Expr::scaled(double factor) const {
  if (factor == 1.0) return *this;
  Expr e;
  e.root_ = fold(make_node(Op::Mul, make_const(factor), root_));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", factor);
  e.source_ = std::string(buf) + "*(" + source_ + ")";
  return e;
}

double Expr::eval(double x, double y, double t) const { return eval_node(*root_, x, y, t); }

void Expr::eval_many(std::span<const double> xs, std::span<const double> ys, double t,
                     std::span<double> out) const {
  eval_node_many(*root_, xs, ys, t, out);
}

bool Expr::depends_on_t() const { return depends_on(*root_, Op::VarT); }

bool Expr::depends_on_space() const {
  return depends_on(*root_, Op::VarX) || depends_on(*root_, Op::VarY);
}

bool Expr::is_zero() const { return root_->op == Op::Const && root_->value == 0.0; }

std::string Expr::canonical() const { return print(*root_); }

}  // namespace oscikg
