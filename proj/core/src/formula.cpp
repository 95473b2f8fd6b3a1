#include "powersim/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "powersim/csv.hpp"
#include "powersim/errors.hpp"

namespace powersim {

namespace {

using Atom = Formula::Atom;
using Term = Formula::Term;
using TermList = std::vector<Term>;

bool contains(const Term& term, const Atom& atom) {
  return std::find(term.atoms.begin(), term.atoms.end(), atom) !=
         term.atoms.end();
}

Term merge(const Term& a, const Term& b) {
  Term out = a;
  for (const auto& atom : b.atoms)
    if (!contains(out, atom)) out.atoms.push_back(atom);
  return out;
}

std::string term_key(const Term& term) {
  std::vector<std::string> parts;
  parts.reserve(term.atoms.size());
  for (const auto& a : term.atoms) parts.push_back(a.text);
  std::sort(parts.begin(), parts.end());
  std::string key;
  for (const auto& p : parts) {
    key += p;
    key.push_back('\x1f');
  }
  return key;
}

void append_unique(TermList& list, const Term& term) {
  const std::string key = term_key(term);
  for (const auto& t : list)
    if (term_key(t) == key) return;
  list.push_back(term);
}

TermList cross(const TermList& a, const TermList& b) {
  TermList out;
  for (const auto& ta : a)
    for (const auto& tb : b) append_unique(out, merge(ta, tb));
  return out;
}

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& text) : text_(text) {}

  Formula parse() {
    Formula f;
    f.source = text_;
    skip_space();
    const std::string response = ident();
    if (response != "y")
      throw ParseError("formula: the response must be named 'y'", 0);
    skip_space();
    expect('~');
    TermList terms = sum();
    skip_space();
    if (pos_ != text_.size())
      throw ParseError("formula: unexpected character '" +
                           std::string(1, text_[pos_]) + "'",
                       pos_);
    if (terms.empty())
      throw ParseError("formula: no terms on the right-hand side", pos_);
    f.terms = std::move(terms);
    return f;
  }

 private:
  TermList sum() {
    TermList out;
    for (const auto& t : product()) append_unique(out, t);
    for (;;) {
      skip_space();
      if (!accept('+')) break;
      for (const auto& t : product()) append_unique(out, t);
    }
    return out;
  }

  TermList product() {
    TermList lhs = interaction();
    for (;;) {
      skip_space();
      if (!accept('*')) break;
      TermList rhs = interaction();
      TermList expanded = lhs;  // a*b = a + b + a:b
      for (const auto& t : rhs) append_unique(expanded, t);
      for (const auto& t : cross(lhs, rhs)) append_unique(expanded, t);
      lhs = std::move(expanded);
    }
    return lhs;
  }

  TermList interaction() {
    TermList lhs = factor();
    for (;;) {
      skip_space();
      if (!accept(':')) break;
      lhs = cross(lhs, factor());
    }
    return lhs;
  }

  TermList factor() {
    skip_space();
    if (pos_ >= text_.size())
      throw ParseError("formula: unexpected end of input", pos_);
    if (accept('(')) {
      TermList inner = sum();
      expect(')');
      return inner;
    }
    const std::size_t start = pos_;
    const std::string name = ident();
    skip_space();
    if (name == "poly" && at('(')) return {Term{{poly_atom(start)}}};
    if (name == "I" && at('(')) return {Term{{indicator_atom(start)}}};
    if (at('('))
      throw ParseError("formula: unknown function '" + name + "'", start);
    Atom a;
    a.kind = Atom::Kind::var;
    a.name = name;
    a.text = name;
    return {Term{{a}}};
  }

  Atom poly_atom(std::size_t start) {
    expect('(');
    skip_space();
    Atom a;
    a.kind = Atom::Kind::poly;
    a.name = ident();
    skip_space();
    expect(',');
    skip_space();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    int degree = 0;
    auto [ptr, ec] = std::from_chars(begin, end, degree);
    if (ec != std::errc() || degree < 1)
      throw ParseError("formula: poly degree must be a positive integer",
                       pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    skip_space();
    expect(')');
    a.degree = degree;
    a.text = "poly(" + a.name + "," + std::to_string(degree) + ")";
    (void)start;
    return a;
  }

  Atom indicator_atom(std::size_t start) {
    // Reuse the expression grammar for the full I(...) form.
    std::size_t depth = 0;
    std::size_t scan = pos_;
    do {
      if (scan >= text_.size())
        throw ParseError("formula: unbalanced parentheses in I(...)", start);
      if (text_[scan] == '(') ++depth;
      if (text_[scan] == ')') --depth;
      ++scan;
    } while (depth > 0);
    const std::string snippet = "I" + text_.substr(pos_, scan - pos_);
    pos_ = scan;
    Atom a;
    a.kind = Atom::Kind::indicator;
    a.expr = parse_expression(snippet);
    a.text = a.expr.to_string();
    const auto vars = a.expr.variables();
    a.name = vars.empty() ? "" : vars.front();
    return a;
  }

  std::string ident() {
    if (pos_ >= text_.size() ||
        !(std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
          text_[pos_] == '_'))
      throw ParseError("formula: expected a name", pos_);
    const std::size_t begin = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    return text_.substr(begin, pos_ - begin);
  }

  bool at(char c) const { return pos_ < text_.size() && text_[pos_] == c; }

  bool accept(char c) {
    if (at(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c))
      throw ParseError("formula: expected '" + std::string(1, c) + "'", pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

// One expanded column-to-be: values plus bookkeeping.
struct Expanded {
  std::string label;
  std::vector<double> values;
  std::set<std::string> predictors;
};

std::vector<double> factor_levels(const std::vector<double>& col) {
  std::vector<double> levels;
  for (double v : col)
    if (std::find(levels.begin(), levels.end(), v) == levels.end())
      levels.push_back(v);
  return levels;
}

std::vector<Expanded> expand_atom(const Atom& atom, const DataTable& data) {
  std::vector<Expanded> out;
  switch (atom.kind) {
    case Atom::Kind::var: {
      const std::size_t j = data.find(atom.name);
      if (j == DataTable::npos)
        throw Error("formula: no column named '" + atom.name + "'");
      if (data.dtype(j) == DType::factor) {
        // K-1 indicators against the first-seen level.
        const auto levels = factor_levels(data.column(j));
        for (std::size_t k = 1; k < levels.size(); ++k) {
          Expanded e;
          e.label = atom.name + "=" + format_double(levels[k]);
          e.predictors.insert(atom.name);
          e.values.reserve(data.nrow());
          for (double v : data.column(j))
            e.values.push_back(v == levels[k] ? 1.0 : 0.0);
          out.push_back(std::move(e));
        }
        if (out.empty())
          throw Error("formula: factor column '" + atom.name +
                      "' has a single level");
      } else {
        Expanded e;
        e.label = atom.name;
        e.predictors.insert(atom.name);
        e.values = data.column(j);
        out.push_back(std::move(e));
      }
      return out;
    }
    case Atom::Kind::poly: {
      const std::size_t j = data.find(atom.name);
      if (j == DataTable::npos)
        throw Error("formula: no column named '" + atom.name + "'");
      const auto& col = data.column(j);
      std::vector<double> power(col.begin(), col.end());
      for (int d = 1; d <= atom.degree; ++d) {
        Expanded e;
        e.label = d == 1 ? atom.name : atom.name + "^" + std::to_string(d);
        e.predictors.insert(atom.name);
        e.values = power;
        out.push_back(std::move(e));
        for (std::size_t i = 0; i < power.size(); ++i) power[i] *= col[i];
      }
      return out;
    }
    case Atom::Kind::indicator: {
      Expanded e;
      e.label = atom.text;
      for (const auto& v : atom.expr.variables()) e.predictors.insert(v);
      e.values = atom.expr.evaluate_batch(data);
      out.push_back(std::move(e));
      return out;
    }
  }
  throw Error("formula: invalid atom");
}

}  // namespace

Formula parse_formula(const std::string& text) {
  FormulaParser parser(text);
  return parser.parse();
}

DesignMatrix build_design(const Formula& formula, const DataTable& data) {
  const std::size_t n = data.nrow();
  std::vector<Expanded> columns;
  columns.push_back({"(Intercept)", std::vector<double>(n, 1.0), {}});

  for (const auto& term : formula.terms) {
    std::vector<Expanded> acc = expand_atom(term.atoms.front(), data);
    for (std::size_t a = 1; a < term.atoms.size(); ++a) {
      const std::vector<Expanded> next = expand_atom(term.atoms[a], data);
      std::vector<Expanded> crossed;
      for (const auto& lhs : acc)
        for (const auto& rhs : next) {
          // Label order follows the term's atom order.
          Expanded e;
          e.label = lhs.label + ":" + rhs.label;
          e.predictors = lhs.predictors;
          e.predictors.insert(rhs.predictors.begin(), rhs.predictors.end());
          e.values.resize(n);
          for (std::size_t i = 0; i < n; ++i)
            e.values[i] = lhs.values[i] * rhs.values[i];
          crossed.push_back(std::move(e));
        }
      acc = std::move(crossed);
    }
    for (auto& e : acc) columns.push_back(std::move(e));
  }

  DesignMatrix design;
  design.x.resize(n, static_cast<Eigen::Index>(columns.size()));
  design.columns.reserve(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) design.x(i, j) = columns[j].values[i];
    DesignColumn meta;
    meta.label = columns[j].label;
    meta.predictors.assign(columns[j].predictors.begin(),
                           columns[j].predictors.end());
    meta.interaction = columns[j].predictors.size() >= 2;
    design.columns.push_back(std::move(meta));
  }
  return design;
}

DesignMatrix build_full_design(const DataTable& data) {
  Formula f;
  f.source = "y ~ .";
  for (const auto& name : data.names()) {
    Formula::Atom a;
    a.kind = Formula::Atom::Kind::var;
    a.name = name;
    a.text = name;
    f.terms.push_back({{a}});
  }
  if (f.terms.empty()) throw Error("formula: table has no columns");
  return build_design(f, data);
}

}  // namespace powersim
