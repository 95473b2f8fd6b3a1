#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "powersim/rng.hpp"
#include "powersim/table.hpp"

namespace powersim {

// Symmetric positive-definite matrix with unit diagonal and off-diagonals
// in (-1, 1); the latent-Gaussian correlation of a copula model.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const { return m_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  double min_eigenvalue() const { return min_eig_; }

 private:
  Eigen::MatrixXd m_;
  double min_eig_ = 0.0;
};

// Rough pairwise-correlation guesses plus a concentration parameter; larger
// concentration keeps sampled matrices closer to the guess.
struct VineSpec {
  Eigen::MatrixXd guess;
  double concentration = 10.0;
  std::vector<std::string> names;

  void validate() const;  // throws on shape/range violations
};

// One step of the partial-correlation recursion:
//   rho_ij;L = rho_ij;kL * sqrt((1-rho_ik;L^2)(1-rho_jk;L^2)) + rho_ik;L rho_jk;L
// All inputs must lie in (-1, 1); the output then does too.
double partial_recursion(double rho_ij_kL, double rho_ik_L, double rho_jk_L);

// C-vine partial correlations rho_{ij;1..i-1} implied by a guess matrix,
// via the conditional multivariate-normal formula (generalized inverse when
// the conditioning block is singular). Returned in the strict upper
// triangle; entries are clamped to +/-(1 - 1e-9).
Eigen::MatrixXd guess_to_partials(const Eigen::MatrixXd& guess);

// Rebuilds the full correlation matrix from C-vine partials (the inverse
// direction of guess_to_partials, applied draw by draw).
Eigen::MatrixXd partials_to_correlation(const Eigen::MatrixXd& partials);

// Draws a random correlation matrix: each vine partial is sampled from a
// Beta on (-1,1) centered at the guess-implied partial, then the pairwise
// correlations are reconstructed. `clamped` (optional) counts hyperparameters
// that had to be clamped away from zero.
CorrelationMatrix sample_cvine(const VineSpec& spec, RandomStream& rng,
                               std::size_t* clamped = nullptr);

// Nearest positive-definite correlation matrix: eigenvalue clipping at a
// 1e-8 floor followed by diagonal renormalization; idempotent on inputs
// that already satisfy the invariants.
CorrelationMatrix nearest_pd(const Eigen::MatrixXd& symmetric);

// Spearman rank correlation (average ranks) of the table's columns.
Eigen::MatrixXd spearman_correlation(const DataTable& data);

struct LatentCorrelationEstimate {
  CorrelationMatrix point;
  std::vector<CorrelationMatrix> draws;  // row-bootstrap uncertainty
};

// Rank-based latent-correlation estimate 2*sin(pi/6 * spearman) with a
// row bootstrap for uncertainty. Requires n >= 10 and at least two distinct
// values per column.
LatentCorrelationEstimate estimate_latent_correlation(const DataTable& data,
                                                      std::size_t bootstrap_reps,
                                                      RandomStream& rng);

}  // namespace powersim
