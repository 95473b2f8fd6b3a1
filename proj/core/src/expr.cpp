#include "powersim/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "powersim/csv.hpp"
#include "powersim/errors.hpp"

namespace powersim {

namespace detail {

enum class Func { log, exp, sqrt, abs };

struct ExprNode {
  enum class Kind {
    literal,
    variable,
    negate,
    add,
    sub,
    mul,
    div,
    pow,
    call,
    indicator
  };

  Kind kind;
  double value = 0.0;      // literal; indicator comparison constant
  std::string name;        // variable; indicator variable
  Func func = Func::log;   // call
  bool not_equal = false;  // indicator I(v != c)
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make(ExprNode node) {
  return std::make_shared<const ExprNode>(std::move(node));
}

// ---- evaluation ----------------------------------------------------------

template <typename Lookup>
double eval(const ExprNode& n, const Lookup& lookup) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::literal:
      return n.value;
    case K::variable:
      return lookup(n.name);
    case K::negate:
      return -eval(*n.lhs, lookup);
    case K::add:
      return eval(*n.lhs, lookup) + eval(*n.rhs, lookup);
    case K::sub:
      return eval(*n.lhs, lookup) - eval(*n.rhs, lookup);
    case K::mul:
      return eval(*n.lhs, lookup) * eval(*n.rhs, lookup);
    case K::div:
      return eval(*n.lhs, lookup) / eval(*n.rhs, lookup);
    case K::pow:
      return std::pow(eval(*n.lhs, lookup), eval(*n.rhs, lookup));
    case K::call: {
      const double x = eval(*n.lhs, lookup);
      switch (n.func) {
        case Func::log:
          if (x <= 0.0)
            throw Error("expr: log of nonpositive value " + format_double(x));
          return std::log(x);
        case Func::exp:
          return std::exp(x);
        case Func::sqrt:
          if (x < 0.0)
            throw Error("expr: sqrt of negative value " + format_double(x));
          return std::sqrt(x);
        case Func::abs:
          return std::fabs(x);
      }
      return 0.0;
    }
    case K::indicator: {
      const double v = lookup(n.name);
      const bool eq = v == n.value;
      return (n.not_equal ? !eq : eq) ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

// ---- printing ------------------------------------------------------------

// Precedence levels used to emit the minimal parentheses that preserve the
// tree structure on re-parse.
int prec(const ExprNode& n) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::add:
    case K::sub:
      return 1;
    case K::mul:
    case K::div:
      return 2;
    case K::negate:
      return 3;
    case K::pow:
      return 4;
    default:
      return 5;
  }
}

const char* func_name(Func f) {
  switch (f) {
    case Func::log:
      return "log";
    case Func::exp:
      return "exp";
    case Func::sqrt:
      return "sqrt";
    case Func::abs:
      return "abs";
  }
  return "?";
}

void print(const ExprNode& n, std::string& out) {
  using K = ExprNode::Kind;
  auto child = [&](const ExprNode& c, bool wrap) {
    if (wrap) out.push_back('(');
    print(c, out);
    if (wrap) out.push_back(')');
  };
  switch (n.kind) {
    case K::literal:
      out += format_double(n.value);
      return;
    case K::variable:
      out += n.name;
      return;
    case K::negate:
      out.push_back('-');
      child(*n.lhs, prec(*n.lhs) < 3);
      return;
    case K::add:
    case K::sub:
    case K::mul:
    case K::div: {
      const int p = prec(n);
      const char op = n.kind == K::add   ? '+'
                      : n.kind == K::sub ? '-'
                      : n.kind == K::mul ? '*'
                                         : '/';
      child(*n.lhs, prec(*n.lhs) < p);
      out.push_back(' ');
      out.push_back(op);
      out.push_back(' ');
      child(*n.rhs, prec(*n.rhs) <= p);  // left-associative
      return;
    }
    case K::pow:
      child(*n.lhs, prec(*n.lhs) <= 4);  // right-associative
      out.push_back('^');
      child(*n.rhs, prec(*n.rhs) < 3);   // exponent slot accepts a unary
      return;
    case K::call:
      out += func_name(n.func);
      out.push_back('(');
      print(*n.lhs, out);
      out.push_back(')');
      return;
    case K::indicator:
      out += "I(";
      out += n.name;
      out += n.not_equal ? " != " : " == ";
      out += format_double(n.value);
      out.push_back(')');
      return;
  }
}

void collect_vars(const ExprNode& n, std::set<std::string>& vars) {
  using K = ExprNode::Kind;
  if (n.kind == K::variable || n.kind == K::indicator) vars.insert(n.name);
  if (n.lhs) collect_vars(*n.lhs, vars);
  if (n.rhs) collect_vars(*n.rhs, vars);
}

std::size_t count_terms(const ExprNode& n) {
  using K = ExprNode::Kind;
  if (n.kind == K::add || n.kind == K::sub)
    return count_terms(*n.lhs) + count_terms(*n.rhs);
  return 1;
}

// ---- parser --------------------------------------------------------------

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    skip_space();
    if (at_end()) throw ParseError("expr: empty expression", 0);
    NodePtr e = additive();
    skip_space();
    if (!at_end())
      throw ParseError("expr: unexpected character '" +
                           std::string(1, text_[pos_]) + "'",
                       pos_);
    return e;
  }

 private:
  NodePtr additive() {
    NodePtr lhs = multiplicative();
    for (;;) {
      skip_space();
      if (accept('+')) {
        ExprNode n{ExprNode::Kind::add};
        n.lhs = lhs;
        n.rhs = multiplicative();
        lhs = make(std::move(n));
      } else if (accept('-')) {
        ExprNode n{ExprNode::Kind::sub};
        n.lhs = lhs;
        n.rhs = multiplicative();
        lhs = make(std::move(n));
      } else {
        return lhs;
      }
    }
  }

  NodePtr multiplicative() {
    NodePtr lhs = unary();
    for (;;) {
      skip_space();
      if (accept('*')) {
        ExprNode n{ExprNode::Kind::mul};
        n.lhs = lhs;
        n.rhs = unary();
        lhs = make(std::move(n));
      } else if (accept('/')) {
        ExprNode n{ExprNode::Kind::div};
        n.lhs = lhs;
        n.rhs = unary();
        lhs = make(std::move(n));
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    skip_space();
    if (accept('-')) {
      ExprNode n{ExprNode::Kind::negate};
      n.lhs = unary();
      return make(std::move(n));
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_space();
    if (accept('^')) {
      ExprNode n{ExprNode::Kind::pow};
      n.lhs = base;
      n.rhs = unary();  // binds tighter than unary minus on the left
      return make(std::move(n));
    }
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (at_end()) throw ParseError("expr: unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = additive();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return identifier();
    throw ParseError("expr: unexpected character '" + std::string(1, c) + "'",
                     pos_);
  }

  NodePtr number() {
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc())
      throw ParseError("expr: malformed number", pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    ExprNode n{ExprNode::Kind::literal};
    n.value = value;
    return make(std::move(n));
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    skip_space();
    if (!at_end() && text_[pos_] == '(') {
      if (name == "I") return indicator(start);
      ++pos_;
      ExprNode n{ExprNode::Kind::call};
      if (name == "log")
        n.func = Func::log;
      else if (name == "exp")
        n.func = Func::exp;
      else if (name == "sqrt")
        n.func = Func::sqrt;
      else if (name == "abs")
        n.func = Func::abs;
      else
        throw ParseError("expr: unknown function '" + name + "'", start);
      n.lhs = additive();
      expect(')');
      return make(std::move(n));
    }
    ExprNode n{ExprNode::Kind::variable};
    n.name = std::move(name);
    return make(std::move(n));
  }

  NodePtr indicator(std::size_t start) {
    expect('(');
    skip_space();
    if (at_end() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
                      text_[pos_] == '_'))
      throw ParseError("expr: indicator expects a variable name", pos_);
    const std::size_t vstart = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '_'))
      ++pos_;
    ExprNode n{ExprNode::Kind::indicator};
    n.name = text_.substr(vstart, pos_ - vstart);
    skip_space();
    if (accept_pair('=', '='))
      n.not_equal = false;
    else if (accept_pair('!', '='))
      n.not_equal = true;
    else
      throw ParseError("expr: indicator expects '==' or '!='", pos_);
    skip_space();
    bool neg = accept('-');
    skip_space();
    if (at_end() || !(std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                      text_[pos_] == '.'))
      throw ParseError("expr: indicator expects a numeric literal", pos_);
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, n.value);
    if (ec != std::errc())
      throw ParseError("expr: malformed number in indicator", pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    if (neg) n.value = -n.value;
    expect(')');
    (void)start;
    return make(std::move(n));
  }

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_pair(char a, char b) {
    skip_space();
    if (pos_ + 1 < text_.size() && text_[pos_] == a && text_[pos_ + 1] == b) {
      pos_ += 2;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_space();
    if (at_end() || text_[pos_] != c)
      throw ParseError("expr: expected '" + std::string(1, c) + "'", pos_);
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace
}  // namespace detail

double Expr::evaluate(
    const std::unordered_map<std::string, double>& binding) const {
  if (!root_) throw Error("expr: evaluating an empty expression");
  return detail::eval(*root_, [&](const std::string& name) {
    auto it = binding.find(name);
    if (it == binding.end())
      throw Error("expr: unbound variable '" + name + "'");
    return it->second;
  });
}

std::vector<double> Expr::evaluate_batch(const DataTable& table) const {
  if (!root_) throw Error("expr: evaluating an empty expression");
  // Resolve the variables once so missing columns fail before any row work.
  std::unordered_map<std::string, const std::vector<double>*> columns;
  for (const auto& var : variables()) {
    const std::size_t j = table.find(var);
    if (j == DataTable::npos)
      throw Error("expr: unbound variable '" + var + "'");
    columns.emplace(var, &table.column(j));
  }
  std::vector<double> out(table.nrow());
  for (std::size_t i = 0; i < table.nrow(); ++i) {
    try {
      out[i] = detail::eval(*root_, [&](const std::string& name) {
        return (*columns.find(name)->second)[i];
      });
    } catch (const Error& e) {
      throw Error("row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::string Expr::to_string() const {
  if (!root_) return "";
  std::string out;
  detail::print(*root_, out);
  return out;
}

std::vector<std::string> Expr::variables() const {
  std::set<std::string> vars;
  if (root_) detail::collect_vars(*root_, vars);
  return {vars.begin(), vars.end()};
}

std::size_t Expr::term_count() const {
  return root_ ? detail::count_terms(*root_) : 0;
}

Expr parse_expression(const std::string& text) {
  detail::Parser parser(text);
  return Expr(parser.parse());
}

Expr make_literal(double value) {
  detail::ExprNode n{detail::ExprNode::Kind::literal};
  n.value = value;
  return Expr(detail::make(std::move(n)));
}

}  // namespace powersim
