#include "powersim/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "powersim/errors.hpp"

namespace powersim {

namespace {

constexpr double kPartialClamp = 1.0 - 1e-9;
constexpr double kEigenFloor = 1e-8;
constexpr double kMinHyper = 1e-3;

double clamp_partial(double rho) {
  return std::clamp(rho, -kPartialClamp, kPartialClamp);
}

}  // namespace

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  const Eigen::Index p = m_.rows();
  if (p == 0 || m_.cols() != p)
    throw Error("correlation: matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::fabs(m_(i, i) - 1.0) > 1e-12)
      throw Error("correlation: diagonal must be 1");
    m_(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < p; ++j) {
      if (std::fabs(m_(i, j) - m_(j, i)) > 1e-12)
        throw Error("correlation: matrix must be symmetric");
      const double v = 0.5 * (m_(i, j) + m_(j, i));
      if (!(v > -1.0 && v < 1.0))
        throw Error("correlation: off-diagonals must lie in (-1, 1)");
      m_(i, j) = m_(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_,
                                                    Eigen::EigenvaluesOnly);
  min_eig_ = es.eigenvalues().minCoeff();
  if (!(min_eig_ > 0.0))
    throw Error("correlation: matrix is not positive definite");
}

void VineSpec::validate() const {
  const Eigen::Index p = guess.rows();
  if (p == 0 || guess.cols() != p)
    throw Error("vine: guess matrix must be square and nonempty");
  if (!(concentration > 0.0))
    throw Error("vine: concentration m must be > 0");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (guess(i, i) != 1.0)
      throw Error("vine: guess diagonal must be exactly 1");
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::fabs(guess(i, j) - guess(j, i)) > 1e-12)
        throw Error("vine: guess matrix must be symmetric");
      if (guess(i, j) < -1.0 || guess(i, j) > 1.0)
        throw Error("vine: guess entries must lie in [-1, 1]");
    }
  }
  if (!names.empty() && names.size() != static_cast<std::size_t>(p))
    throw Error("vine: names must match the guess dimension");
}

double partial_recursion(double rho_ij_kL, double rho_ik_L, double rho_jk_L) {
  for (double r : {rho_ij_kL, rho_ik_L, rho_jk_L})
    if (!(r > -1.0 && r < 1.0))
      throw Error("partial_recursion: inputs must lie in (-1, 1)");
  return rho_ij_kL *
             std::sqrt((1.0 - rho_ik_L * rho_ik_L) *
                       (1.0 - rho_jk_L * rho_jk_L)) +
         rho_ik_L * rho_jk_L;
}

Eigen::MatrixXd guess_to_partials(const Eigen::MatrixXd& guess) {
  const Eigen::Index p = guess.rows();
  if (p == 0 || guess.cols() != p)
    throw Error("guess_to_partials: matrix must be square and nonempty");
  if (((guess - guess.transpose()).array().abs() > 1e-12).any())
    throw Error("guess_to_partials: matrix must be symmetric");

  Eigen::MatrixXd partials = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 1; j < p; ++j)
    partials(0, j) = clamp_partial(guess(0, j));

  for (Eigen::Index i = 1; i + 1 < p; ++i) {
    // Conditioning set B = {0..i-1}; pseudo-inverse handles singular guesses.
    const Eigen::MatrixXd sigma_bb = guess.topLeftCorner(i, i);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sigma_bb);
    for (Eigen::Index j = i + 1; j < p; ++j) {
      Eigen::MatrixXd sigma_ab(2, i);
      sigma_ab.row(0) = guess.row(i).head(i);
      sigma_ab.row(1) = guess.row(j).head(i);
      Eigen::Matrix2d sigma_aa;
      sigma_aa << guess(i, i), guess(i, j), guess(j, i), guess(j, j);
      const Eigen::Matrix2d cond =
          sigma_aa - sigma_ab * cod.solve(sigma_ab.transpose());
      const double vi = cond(0, 0);
      const double vj = cond(1, 1);
      // A conditionally degenerate variable carries no extra information.
      if (vi <= 1e-14 || vj <= 1e-14) {
        partials(i, j) = 0.0;
        continue;
      }
      partials(i, j) = clamp_partial(cond(0, 1) / std::sqrt(vi * vj));
    }
  }
  return partials;
}

Eigen::MatrixXd partials_to_correlation(const Eigen::MatrixXd& partials) {
  const Eigen::Index p = partials.rows();
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i + 1 < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      double rho = partials(i, j);
      for (Eigen::Index k = i - 1; k >= 0; --k)
        rho = partial_recursion(rho, partials(k, i), partials(k, j));
      r(i, j) = r(j, i) = rho;
    }
  }
  return r;
}

CorrelationMatrix sample_cvine(const VineSpec& spec, RandomStream& rng,
                               std::size_t* clamped) {
  spec.validate();
  const Eigen::Index p = spec.guess.rows();
  const double m = spec.concentration;
  const Eigen::MatrixXd center = guess_to_partials(spec.guess);

  std::size_t clamp_count = 0;
  Eigen::MatrixXd draws = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i + 1 < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      // Mean of the (-1,1)-scaled Beta equals the guess-implied partial.
      double alpha = m * (center(i, j) + 1.0) / 2.0;
      double beta = m - alpha;
      if (alpha < kMinHyper || beta < kMinHyper) {
        alpha = std::max(alpha, kMinHyper);
        beta = std::max(beta, kMinHyper);
        ++clamp_count;
      }
      draws(i, j) = clamp_partial(2.0 * rng.beta(alpha, beta) - 1.0);
    }
  }
  if (clamped) *clamped = clamp_count;

  Eigen::MatrixXd r = partials_to_correlation(draws);
  // Partials clamped against +/-1 can leave the reconstruction numerically
  // singular; repair those rare draws.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-10) return nearest_pd(r);
  return CorrelationMatrix(std::move(r));
}

CorrelationMatrix nearest_pd(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() == 0 || symmetric.rows() != symmetric.cols())
    throw Error("nearest_pd: matrix must be square and nonempty");
  Eigen::MatrixXd m = 0.5 * (symmetric + symmetric.transpose());
  const Eigen::Index p = m.rows();
  for (int pass = 0; pass < 100; ++pass) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const bool pd = es.eigenvalues().minCoeff() >= kEigenFloor;
    bool unit_diag = true;
    for (Eigen::Index i = 0; i < p; ++i)
      unit_diag = unit_diag && std::fabs(m(i, i) - 1.0) <= 1e-12;
    if (pd && unit_diag) {
      for (Eigen::Index i = 0; i < p; ++i) m(i, i) = 1.0;
      // Off-diagonals of a PSD unit-diagonal matrix may still sit at +/-1;
      // shrink them inside the open interval.
      bool boundary = false;
      for (Eigen::Index i = 0; i < p && !boundary; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j)
          boundary = boundary || std::fabs(m(i, j)) >= 1.0;
      if (!boundary) return CorrelationMatrix(std::move(m));
    }
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(kEigenFloor);
    m = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd d = m.diagonal().cwiseSqrt();
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) m(i, j) /= d(i) * d(j);
    m = 0.5 * (m + m.transpose());
  }
  throw Error("nearest_pd: failed to converge");
}

Eigen::MatrixXd spearman_correlation(const DataTable& data) {
  const std::size_t n = data.nrow();
  const std::size_t p = data.ncol();
  if (n < 2) throw Error("spearman: need at least 2 rows");

  // Average ranks per column.
  Eigen::MatrixXd ranks(n, p);
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& col = data.column(j);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    std::size_t i = 0;
    while (i < n) {
      std::size_t k = i;
      while (k + 1 < n && col[order[k + 1]] == col[order[i]]) ++k;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(k)) + 1.0;
      for (std::size_t t = i; t <= k; ++t) ranks(order[t], j) = avg;
      i = k + 1;
    }
  }

  Eigen::RowVectorXd mean = ranks.colwise().mean();
  Eigen::MatrixXd centered = ranks.rowwise() - mean;
  Eigen::VectorXd sd = (centered.colwise().squaredNorm() / double(n - 1))
                           .cwiseSqrt()
                           .transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      if (sd(i) <= 0.0 || sd(j) <= 0.0)
        throw Error("spearman: constant column '" + data.name(j) + "'");
      corr(i, j) = corr(j, i) = cov(i, j) / (sd(i) * sd(j));
    }
  }
  return corr;
}

LatentCorrelationEstimate estimate_latent_correlation(const DataTable& data,
                                                      std::size_t bootstrap_reps,
                                                      RandomStream& rng) {
  const std::size_t n = data.nrow();
  if (n < 10) throw Error("estimate_latent_correlation: need n >= 10 rows");
  for (std::size_t j = 0; j < data.ncol(); ++j) {
    const auto& col = data.column(j);
    const bool constant =
        std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; });
    if (constant)
      throw Error("estimate_latent_correlation: constant column '" +
                  data.name(j) + "'");
  }

  auto latent = [](const Eigen::MatrixXd& spearman) {
    Eigen::MatrixXd out = spearman;
    const Eigen::Index p = out.rows();
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        out(i, j) = i == j ? 1.0
                           : 2.0 * std::sin(M_PI * spearman(i, j) / 6.0);
    return out;
  };

  LatentCorrelationEstimate est{nearest_pd(latent(spearman_correlation(data))),
                                {}};
  est.draws.reserve(bootstrap_reps);

  std::vector<std::size_t> rows(n);
  for (std::size_t r = 0; r < bootstrap_reps; ++r) {
    for (int attempt = 0;; ++attempt) {
      for (auto& idx : rows) idx = rng.uniform_index(n);
      DataTable resampled = data.take_rows(rows);
      try {
        est.draws.push_back(
            nearest_pd(latent(spearman_correlation(resampled))));
        break;
      } catch (const Error&) {
        // A resample can hit a constant column; redraw.
        if (attempt >= 100)
          throw Error(
              "estimate_latent_correlation: bootstrap resamples keep "
              "producing constant columns");
      }
    }
  }
  return est;
}

}  // namespace powersim
