#pragma once

#include <span>

#include "rbi/matrix.hpp"

namespace rbi {

/// Thin SVD restricted to the numerical rank.
///
/// `singular_values` holds all computed values in descending order;
/// the first `rank` of them exceed the rank tolerance. `left_basis` (m x rank)
/// spans ran(A) and `right_basis` (n x rank) spans ran(A^T).
struct SvdSummary {
    index_t rows = 0;
    index_t cols = 0;
    index_t rank = 0;
    Vector singular_values;
    DenseMatrix left_basis;
    DenseMatrix right_basis;

    double sigma_max() const { return rank > 0 ? singular_values.front() : 0.0; }
    double sigma_min() const { return rank > 0 ? singular_values[static_cast<std::size_t>(rank - 1)] : 0.0; }
};

struct SvdOptions {
    double rank_tol_factor = 1.0;
    /// Refuse when min(m,n)^3 exceeds this many flops.
    double flop_ceiling = 4.0e9;
};

/// Thrown when a dense SVD would exceed the configured work ceiling.
class SvdTooLarge : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

double svd_flop_estimate(index_t rows, index_t cols);

SvdSummary svd_summary(const Matrix& a, const SvdOptions& opts = {});

/// Build a summary from known factors A = U diag(d) V^T (d need not be sorted).
SvdSummary svd_from_factors(const DenseMatrix& u, std::span<const double> d, const DenseMatrix& v);

/// A^+ b via the truncated SVD.
Vector pinv_apply(const SvdSummary& svd, std::span<const double> b);
Vector min_norm_lsq(const Matrix& a, std::span<const double> b, const SvdOptions& opts = {});

/// A^+ A v: component of v in ran(A^T).
Vector project_rowspace(const SvdSummary& svd, std::span<const double> v);
/// A A^+ v: component of v in ran(A).
Vector project_colspace(const SvdSummary& svd, std::span<const double> v);
/// (I - A A^+) v.
Vector project_left_nullspace(const SvdSummary& svd, std::span<const double> v);
/// (I - A^+ A) v.
Vector project_nullspace(const SvdSummary& svd, std::span<const double> v);

struct PowerIterationResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of B B^T for the row block B = A_{I,:} (its spectral norm squared).
/// Starts from the normalized all-ones vector; stops when successive Rayleigh
/// quotients agree to `rel_tol`.
PowerIterationResult row_block_spectral_norm_sq(const Matrix& a, std::span<const index_t> rows,
                                                double rel_tol = 1e-8, int max_iter = 500);
/// Same for the column block A_{:,J}.
PowerIterationResult col_block_spectral_norm_sq(const Matrix& a, std::span<const index_t> cols,
                                                double rel_tol = 1e-8, int max_iter = 500);

/// Exact lambda_max of a small symmetric matrix.
double symmetric_lambda_max(const DenseMatrix& h);
/// Exact spectral norm squared of a dense block via the smaller Gram matrix.
double spectral_norm_sq(const DenseMatrix& b);

}  // namespace rbi
