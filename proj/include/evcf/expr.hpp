#pragma once

#include <memory>
#include <set>
#include <string>

namespace evcf {

// Read access to the predictable (left-limit) state an expression evaluates
// against. Implementations may trace or restrict reads.
struct StateView {
  virtual double state(const std::string& name) const = 0;
  virtual ~StateView() = default;
};

// Records every name an evaluation touches; used to verify that declared
// dependency lists are honest.
struct TracingView final : StateView {
  const StateView* inner;
  mutable std::set<std::string>* reads;
  TracingView(const StateView* in, std::set<std::string>* r) : inner(in), reads(r) {}
  double state(const std::string& name) const override {
    reads->insert(name);
    return inner->state(name);
  }
};

// Closed arithmetic over states:
//   expr   := term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := number | name | atrisk '(' name ')' | '-' factor | '(' expr ')'
// `name` reads the left-limit state of a module or a baseline value;
// atrisk(X) is 1 while X's state is 0 and 0 afterwards (it reads X).
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& text);

  double eval(const StateView& view) const;
  const std::set<std::string>& free_vars() const { return vars_; }
  const std::string& text() const { return text_; }
  bool empty() const { return root_ == nullptr; }
  // true when the expression is the literal constant c (no reads)
  bool is_constant(double c) const;

  struct Node;  // AST node, defined in expr.cpp

 private:
  std::shared_ptr<const Node> root_;
  std::set<std::string> vars_;
  std::string text_;
};

}  // namespace evcf
