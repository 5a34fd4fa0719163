#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>

#include "rbi/linalg.hpp"
#include "rbi/matrix.hpp"
#include "rbi/random.hpp"

namespace rbi {

/// A linear system together with its reference least-squares solution.
struct ProblemInstance {
    Matrix a;
    Vector b;
    index_t rank = 0;
    /// Upper bound on sigma_max / sigma_min; NaN for problems not generated here.
    double kappa_bound = std::numeric_limits<double>::quiet_NaN();
    bool consistent = true;
    /// A^+ b.
    Vector x_ref;
    std::optional<SvdSummary> svd;
    std::string label;
    std::uint64_t seed = 0;

    index_t rows() const { return a.rows(); }
    index_t cols() const { return a.cols(); }
    double sigma_min() const;
    double sigma_max() const;
    const SvdSummary& require_svd() const;
};

/// The factors of A = U diag(d) V^T.
struct SynthFactors {
    DenseMatrix u;  // m x r, orthonormal columns
    Vector d;       // r entries in [1, kappa]
    DenseMatrix v;  // n x r, orthonormal columns
};

/// Orthonormal columns from Householder QR of a Gaussian rows x cols matrix, sign-fixed so diag(R) >= 0.
DenseMatrix random_orthonormal(index_t rows, index_t cols, Rng& rng);

SynthFactors synth_factors(index_t m, index_t n, index_t r, double kappa, Rng& rng);
/// Dense U D V^T.
Matrix synth_matrix(index_t m, index_t n, index_t r, double kappa, Rng& rng);
Matrix assemble(const SynthFactors& f);

/// b = A g with g standard normal.
Vector consistent_rhs(const Matrix& a, Rng& rng);
/// b = A g + (I - U U^T) h, g ~ N(0, I_n), h ~ N(0, I_m). Equal in distribution to A g + N h'.
Vector inconsistent_rhs(const Matrix& a, const SvdSummary& svd, Rng& rng);
/// b = A g + N h for an explicit left-null basis N.
Vector compose_rhs(const Matrix& a, std::span<const double> g, const DenseMatrix& null_basis,
                   std::span<const double> h);

/// x*^0 = A^+ b + (I - A^+ A) x0.
Vector x_star(const SvdSummary& svd, std::span<const double> b, std::span<const double> x0);

/// ||A A^+ b - b|| <= 1e-9 ||b||.
bool is_consistent(const SvdSummary& svd, std::span<const double> b);

struct SyntheticParams {
    index_t m = 0;
    index_t n = 0;
    index_t r = 0;
    double kappa = 5.0;
    bool consistent = true;
    std::uint64_t seed = 0;
};

ProblemInstance make_synthetic(const SyntheticParams& p);

enum class RhsMode { Consistent, Inconsistent };

/// Wrap a matrix read from disk with a generated right-hand side.
ProblemInstance make_from_matrix(Matrix a, RhsMode mode, std::uint64_t seed, std::string label,
                                 const SvdOptions& opts = {});

/// Fill x_ref, rank and consistency from a precomputed SVD.
void finalize(ProblemInstance& p, SvdSummary svd);

/// Writes A.mtx, b.txt, x_ref.txt and meta.txt (key=value lines).
void save_problem(const ProblemInstance& p, const std::filesystem::path& dir);
ProblemInstance load_problem(const std::filesystem::path& dir, const SvdOptions& opts = {});

/// One value per line, shortest round-trip representation.
void write_vector(const std::filesystem::path& path, std::span<const double> v);
Vector read_vector(const std::filesystem::path& path);

}  // namespace rbi
