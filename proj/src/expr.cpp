#include "evcf/expr.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>
#include <vector>

namespace evcf {

struct Expr::Node {
  enum class Kind { constant, var, atrisk, add, sub, mul, neg } kind;
  double value = 0.0;
  std::string name;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

// recursive-descent parser over a flat token-free scanner
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    auto e = expr();
    skip_ws();
    if (pos_ != s_.size())
      throw std::runtime_error("expression: trailing input at '" + rest() + "'");
    return e;
  }

 private:
  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        const char op = s_[pos_++];
        auto rhs = term();
        auto n = std::make_shared<Node>();
        n->kind = op == '+' ? Node::Kind::add : Node::Kind::sub;
        n->lhs = lhs;
        n->rhs = rhs;
        lhs = n;
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    auto lhs = factor();
    for (;;) {
      skip_ws();
      if (peek() == '*') {
        ++pos_;
        auto rhs = factor();
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::mul;
        n->lhs = lhs;
        n->rhs = rhs;
        lhs = n;
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    skip_ws();
    const char c = peek();
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (c == '-') {
      ++pos_;
      auto inner = factor();
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::neg;
      n->lhs = inner;
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::string name = ident();
      skip_ws();
      if (name == "atrisk") {
        expect('(');
        skip_ws();
        const std::string arg = ident();
        expect(')');
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::atrisk;
        n->name = arg;
        return n;
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::var;
      n->name = name;
      return n;
    }
    throw std::runtime_error("expression: unexpected character at '" + rest() + "'");
  }

  NodePtr number() {
    const char* first = s_.data() + pos_;
    double v = 0.0;
    const auto res = std::from_chars(first, s_.data() + s_.size(), v);
    if (res.ec != std::errc{})
      throw std::runtime_error("expression: bad number at '" + rest() + "'");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::constant;
    n->value = v;
    return n;
  }

  std::string ident() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (pos_ == start)
      throw std::runtime_error("expression: expected a name at '" + rest() + "'");
    return s_.substr(start, pos_ - start);
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c)
      throw std::runtime_error(std::string("expression: expected '") + c + "' at '" +
                               rest() + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  std::string rest() const { return s_.substr(pos_); }

  const std::string& s_;
  std::size_t pos_ = 0;
};

void collect_vars(const NodePtr& n, std::set<std::string>& out) {
  if (!n) return;
  if (n->kind == Node::Kind::var || n->kind == Node::Kind::atrisk) out.insert(n->name);
  collect_vars(n->lhs, out);
  collect_vars(n->rhs, out);
}

double eval_node(const Node& n, const StateView& view) {
  switch (n.kind) {
    case Node::Kind::constant:
      return n.value;
    case Node::Kind::var:
      return view.state(n.name);
    case Node::Kind::atrisk:
      return view.state(n.name) == 0.0 ? 1.0 : 0.0;
    case Node::Kind::add:
      return eval_node(*n.lhs, view) + eval_node(*n.rhs, view);
    case Node::Kind::sub:
      return eval_node(*n.lhs, view) - eval_node(*n.rhs, view);
    case Node::Kind::mul:
      return eval_node(*n.lhs, view) * eval_node(*n.rhs, view);
    case Node::Kind::neg:
      return -eval_node(*n.lhs, view);
  }
  throw std::logic_error("expression: bad node");
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  Expr e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  collect_vars(e.root_, e.vars_);
  return e;
}

double Expr::eval(const StateView& view) const {
  if (!root_) throw std::logic_error("expression: eval on empty Expr");
  return eval_node(*root_, view);
}

bool Expr::is_constant(double c) const {
  if (!root_) return false;
  if (!vars_.empty()) return false;
  struct Zero final : StateView {
    double state(const std::string&) const override { return 0.0; }
  } z;
  return eval(z) == c;
}

}  // namespace evcf
