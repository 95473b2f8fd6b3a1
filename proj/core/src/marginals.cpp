#include "powersim/marginals.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "powersim/dist.hpp"
#include "powersim/errors.hpp"

namespace powersim {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error("marginal: " + msg);
}

// P(X <= k) for X ~ Binomial(n, p).
double binom_cdf(double k, double n, double p) {
  if (k >= n) return 1.0;
  return boost::math::ibeta(n - k, k + 1.0, 1.0 - p);
}

// P(X <= k) for X ~ Poisson(lambda).
double pois_cdf(double k, double lambda) {
  return boost::math::gamma_q(k + 1.0, lambda);
}

// Smallest integer k in [0, hi] with cdf(k) >= u, cdf nondecreasing.
template <typename Cdf>
double search_quantile(double u, double hi, const Cdf& cdf) {
  double lo = 0.0;
  while (lo < hi) {
    const double mid = std::floor((lo + hi) / 2.0);
    if (cdf(mid) >= u)
      hi = mid;
    else
      lo = mid + 1.0;
  }
  return lo;
}

}  // namespace

MarginalSpec MarginalSpec::normal(double mean, double sd) {
  require(std::isfinite(mean) && sd > 0.0, "normal requires sd > 0");
  MarginalSpec s;
  s.kind = Kind::normal;
  s.a = mean;
  s.b = sd;
  return s;
}

MarginalSpec MarginalSpec::uniform(double min, double max) {
  require(max > min, "uniform requires max > min");
  MarginalSpec s;
  s.kind = Kind::uniform;
  s.a = min;
  s.b = max;
  return s;
}

MarginalSpec MarginalSpec::binomial(double size, double prob) {
  require(size >= 1.0 && size == std::floor(size),
          "binomial requires integer size >= 1");
  require(prob >= 0.0 && prob <= 1.0, "binomial requires prob in [0,1]");
  MarginalSpec s;
  s.kind = Kind::binomial;
  s.a = size;
  s.b = prob;
  return s;
}

MarginalSpec MarginalSpec::poisson(double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda),
          "poisson requires lambda > 0");
  MarginalSpec s;
  s.kind = Kind::poisson;
  s.a = lambda;
  return s;
}

MarginalSpec MarginalSpec::multinomial(std::vector<double> probs) {
  require(!probs.empty(), "multinomial requires at least one probability");
  double sum = 0.0;
  for (double p : probs) {
    require(p >= 0.0, "multinomial probabilities must be >= 0");
    sum += p;
  }
  require(std::fabs(sum - 1.0) <= 1e-12,
          "multinomial probabilities must sum to 1");
  MarginalSpec s;
  s.kind = Kind::multinomial;
  s.probs = std::move(probs);
  return s;
}

MarginalSpec MarginalSpec::lognormal(double meanlog, double sdlog) {
  require(std::isfinite(meanlog) && sdlog > 0.0,
          "lognormal requires sdlog > 0");
  MarginalSpec s;
  s.kind = Kind::lognormal;
  s.a = meanlog;
  s.b = sdlog;
  return s;
}

MarginalSpec MarginalSpec::gamma(double shape, double rate) {
  require(shape > 0.0 && rate > 0.0, "gamma requires shape > 0 and rate > 0");
  MarginalSpec s;
  s.kind = Kind::gamma;
  s.a = shape;
  s.b = rate;
  return s;
}

MarginalSpec MarginalSpec::empirical(std::vector<double> values) {
  require(!values.empty(), "empirical requires a nonempty sample");
  std::sort(values.begin(), values.end());
  MarginalSpec s;
  s.kind = Kind::empirical;
  s.sample = std::move(values);
  return s;
}

std::string MarginalSpec::describe() const {
  switch (kind) {
    case Kind::normal:
      return "qnorm";
    case Kind::uniform:
      return "qunif";
    case Kind::binomial:
      return "qbinom";
    case Kind::poisson:
      return "qpois";
    case Kind::multinomial:
      return "qmultinom";
    case Kind::lognormal:
      return "qlnorm";
    case Kind::gamma:
      return "qgamma";
    case Kind::empirical:
      return "empirical";
  }
  return "?";
}

double quantile(const MarginalSpec& spec, double u) {
  require(u > 0.0 && u < 1.0, "quantile requires u in the open interval (0,1)");
  using Kind = MarginalSpec::Kind;
  switch (spec.kind) {
    case Kind::normal:
      return spec.a + spec.b * dist::inv_std_normal(u);
    case Kind::uniform:
      return spec.a + u * (spec.b - spec.a);
    case Kind::binomial: {
      const double n = spec.a;
      const double p = spec.b;
      if (p <= 0.0) return 0.0;
      if (p >= 1.0) return n;
      if (n <= 1024.0) {
        // Accumulate the pmf directly.
        double pmf = std::pow(1.0 - p, n);
        double cdf = pmf;
        double k = 0.0;
        const double ratio = p / (1.0 - p);
        while (cdf < u && k < n) {
          pmf *= (n - k) / (k + 1.0) * ratio;
          cdf += pmf;
          k += 1.0;
        }
        return k;
      }
      return search_quantile(u, n, [&](double k) { return binom_cdf(k, n, p); });
    }
    case Kind::poisson: {
      const double lambda = spec.a;
      if (lambda <= 64.0) {
        double pmf = std::exp(-lambda);
        double cdf = pmf;
        double k = 0.0;
        // The loop is bounded: cdf reaches any u < 1 in finitely many steps.
        while (cdf < u) {
          pmf *= lambda / (k + 1.0);
          cdf += pmf;
          k += 1.0;
          if (k > 20.0 * lambda + 200.0) break;
        }
        return k;
      }
      double hi = lambda + 12.0 * std::sqrt(lambda) + 12.0;
      while (pois_cdf(hi, lambda) < u) hi *= 2.0;
      return search_quantile(u, hi, [&](double k) { return pois_cdf(k, lambda); });
    }
    case Kind::multinomial: {
      double cum = 0.0;
      for (std::size_t k = 0; k < spec.probs.size(); ++k) {
        cum += spec.probs[k];
        if (cum >= u) return static_cast<double>(k + 1);
      }
      return static_cast<double>(spec.probs.size());
    }
    case Kind::lognormal:
      return std::exp(spec.a + spec.b * dist::inv_std_normal(u));
    case Kind::gamma:
      return dist::gamma_quantile(spec.a, u) / spec.b;
    case Kind::empirical: {
      const std::size_t n = spec.sample.size();
      const double k = std::ceil(u * static_cast<double>(n));
      const std::size_t idx =
          k < 1.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(k) - 1);
      return spec.sample[idx];
    }
  }
  throw Error("marginal: invalid spec");
}

// ---- spec-string parsing ---------------------------------------------------

namespace {

class MarginalParser {
 public:
  explicit MarginalParser(const std::string& text) : text_(text) {}

  MarginalSpec parse() {
    skip_space();
    const std::string name = ident();
    skip_space();
    expect('(');
    std::map<std::string, std::vector<double>> args;
    skip_space();
    if (!at(')')) {
      for (;;) {
        skip_space();
        const std::string key = ident();
        skip_space();
        expect('=');
        skip_space();
        std::vector<double> value;
        if (at('c')) {
          value = vector_literal();
        } else {
          value.push_back(number());
        }
        if (args.count(key))
          throw ParseError("marginal: duplicate argument '" + key + "'", pos_);
        args.emplace(key, std::move(value));
        skip_space();
        if (!accept(',')) break;
      }
    }
    expect(')');
    skip_space();
    if (pos_ != text_.size())
      throw ParseError("marginal: trailing characters", pos_);
    return build(name, args);
  }

 private:
  static double scalar(const std::map<std::string, std::vector<double>>& args,
                       const std::string& key) {
    const auto& v = args.at(key);
    if (v.size() != 1)
      throw Error("marginal: argument '" + key + "' must be a scalar");
    return v[0];
  }

  static void check_args(const std::string& name,
                         const std::map<std::string, std::vector<double>>& args,
                         std::initializer_list<const char*> expected) {
    for (const char* key : expected)
      if (!args.count(key))
        throw Error("marginal: " + name + " is missing argument '" + key + "'");
    if (args.size() != expected.size())
      for (const auto& [key, _] : args) {
        bool known = false;
        for (const char* k : expected) known = known || key == k;
        if (!known)
          throw Error("marginal: " + name + " has unexpected argument '" + key +
                      "'");
      }
  }

  MarginalSpec build(const std::string& name,
                     const std::map<std::string, std::vector<double>>& args) {
    if (name == "qnorm") {
      check_args(name, args, {"mean", "sd"});
      return MarginalSpec::normal(scalar(args, "mean"), scalar(args, "sd"));
    }
    if (name == "qunif") {
      check_args(name, args, {"min", "max"});
      return MarginalSpec::uniform(scalar(args, "min"), scalar(args, "max"));
    }
    if (name == "qbinom") {
      check_args(name, args, {"size", "prob"});
      return MarginalSpec::binomial(scalar(args, "size"), scalar(args, "prob"));
    }
    if (name == "qpois") {
      check_args(name, args, {"lambda"});
      return MarginalSpec::poisson(scalar(args, "lambda"));
    }
    if (name == "qmultinom") {
      check_args(name, args, {"probs"});
      return MarginalSpec::multinomial(args.at("probs"));
    }
    if (name == "qlnorm") {
      check_args(name, args, {"meanlog", "sdlog"});
      return MarginalSpec::lognormal(scalar(args, "meanlog"),
                                     scalar(args, "sdlog"));
    }
    if (name == "qgamma") {
      check_args(name, args, {"shape", "rate"});
      return MarginalSpec::gamma(scalar(args, "shape"), scalar(args, "rate"));
    }
    throw Error("marginal: unknown distribution '" + name + "'");
  }

  std::vector<double> vector_literal() {
    expect('c');
    skip_space();
    expect('(');
    std::vector<double> out;
    for (;;) {
      skip_space();
      out.push_back(number());
      skip_space();
      if (!accept(',')) break;
    }
    expect(')');
    return out;
  }

  std::string ident() {
    if (pos_ >= text_.size() ||
        !(std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
          text_[pos_] == '_'))
      throw ParseError("marginal: expected a name", pos_);
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_' || text_[pos_] == '.'))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  double number() {
    bool neg = accept('-');
    skip_space();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin)
      throw ParseError("marginal: expected a number", pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return neg ? -value : value;
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
      throw ParseError("marginal: expected '" + std::string(1, c) + "'", pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

MarginalSpec parse_marginal(const std::string& text) {
  MarginalParser parser(text);
  return parser.parse();
}

}  // namespace powersim
