#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "powersim/expr.hpp"
#include "powersim/table.hpp"

namespace powersim {

// Model formula over named predictors: additive terms, ':' interactions,
// '*' expansion (a*b = a + b + a:b), poly(x, k) raw-power terms, and
// indicator terms via I(var == c). The response symbol must be "y".
struct Formula {
  struct Atom {
    enum class Kind { var, poly, indicator };
    Kind kind = Kind::var;
    std::string name;  // var / poly column name
    int degree = 1;    // poly only
    Expr expr;         // indicator only
    std::string text;  // canonical display

    bool operator==(const Atom& other) const {
      return kind == other.kind && text == other.text;
    }
  };

  // One structural term: a product of atoms (deduplicated set, in first
  // appearance order).
  struct Term {
    std::vector<Atom> atoms;
  };

  std::string source;
  std::vector<Term> terms;
};

Formula parse_formula(const std::string& text);

// One column of an expanded design matrix.
struct DesignColumn {
  std::string label;                    // "(Intercept)", "x1", "Age^2", "a:b"
  std::vector<std::string> predictors;  // original predictors involved
  bool interaction = false;             // term touches >= 2 predictors
};

struct DesignMatrix {
  Eigen::MatrixXd x;  // n rows, intercept first
  std::vector<DesignColumn> columns;
};

// Expands a formula against a table: factor columns become K-1 indicators
// against the first-seen level, poly(x, k) becomes raw powers, interactions
// are products.
DesignMatrix build_design(const Formula& formula, const DataTable& data);

// Intercept plus every table column (factor-expanded); the design used by
// the overall F-test.
DesignMatrix build_full_design(const DataTable& data);

}  // namespace powersim
