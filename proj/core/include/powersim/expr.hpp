#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "powersim/table.hpp"

namespace powersim {

namespace detail {
struct ExprNode;
}

// Immutable arithmetic expression over named variables: +, -, *, /, ^,
// unary minus, log/exp/sqrt/abs, and indicator terms I(var == c) /
// I(var != c). Instances share their AST and are safe to evaluate from
// many threads concurrently.
class Expr {
 public:
  Expr() = default;

  bool valid() const { return root_ != nullptr; }

  // Evaluates against a name -> value binding. Unbound variables and
  // domain violations (log of nonpositive, sqrt of negative) throw.
  double evaluate(const std::unordered_map<std::string, double>& binding) const;

  // Row-wise evaluation over a table whose columns cover the expression's
  // variables. Errors are rethrown with the offending row index attached.
  std::vector<double> evaluate_batch(const DataTable& table) const;

  // Canonical text form; parsing it back yields a structurally identical
  // expression.
  std::string to_string() const;

  // Sorted unique variable names referenced by the expression.
  std::vector<std::string> variables() const;

  // Number of top-level additive terms; used as the parameter count of a
  // generative mean in the discrete-family SNR estimator.
  std::size_t term_count() const;

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> root)
      : root_(std::move(root)) {}

  std::shared_ptr<const detail::ExprNode> root_;

  friend Expr parse_expression(const std::string& text);
  friend Expr make_literal(double value);
};

// Parses an expression string. Precedence: ^ binds tightest, then unary
// minus, then * and /, then + and -. Throws ParseError with a position.
Expr parse_expression(const std::string& text);

// Constant expression; convenience for tests and scaled models.
Expr make_literal(double value);

}  // namespace powersim
