#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rbi/linalg.hpp"
#include "rbi/matrix.hpp"
#include "rbi/problems.hpp"
#include "rbi/random.hpp"
#include "rbi/sampling.hpp"
#include "rbi/solvers.hpp"

namespace rbi {

enum class Provenance { Exact, Estimated, NotApplicable };
const char* provenance_name(Provenance p);

/// max over the support of lambda_max(A^T S S^T A) (or A T T^T A^T for column sketches).
/// With `absorb_scale` the selection scale^2 is left out. Throws InvalidInput for Gaussian
/// sketches and supports larger than `limit`.
double lambda_max_exact(const Matrix& a, const SketchSpec& spec, bool absorb_scale = false,
                        std::size_t limit = BoundSketch::kDefaultEnumerationLimit);

/// Max of ||A_I||^2 (rows) or ||A_{:,J}||^2 (columns) over `num_probe_sets` uniform l-subsets
/// (default: l of them). No dim/l factor: the value pairs with absorbed stepsizes such as 2/lambda_hat.
double lambda_hat(const Matrix& a, index_t ell, Axis axis, Rng& rng, std::optional<index_t> num_probe_sets = {});

struct Estimate {
    double value = 0.0;
    /// 0 for exact values.
    double std_error = 0.0;
    Provenance provenance = Provenance::Exact;
};

/// gamma = E ||A^T S S^T (A A^+ b - b)||^2 for a row sketch; Monte Carlo when not enumerable.
Estimate gamma_exact(const Matrix& a, const SketchSpec& spec, std::span<const double> ls_residual, Rng* rng = nullptr,
                     std::size_t mc_samples = 100000);
/// gamma of the doubly stochastic bound: E ||T T^T A^T S S^T (A A^+ b - b)||^2.
Estimate dsbi_gamma(const Matrix& a, const PairSketch& pair, std::span<const double> ls_residual, Rng* rng = nullptr,
                    std::size_t mc_samples = 100000);
/// beta = || E[A^T S S^T A T T^T T T^T A^T S S^T A] ||.
Estimate dsbi_beta_exact(const Matrix& a, const PairSketch& pair, Rng* rng = nullptr, std::size_t mc_samples = 100000);
/// Sampled beta; the standard error comes from 20 batch means.
Estimate dsbi_beta_monte_carlo(const Matrix& a, const PairSketch& pair, Rng& rng, std::size_t mc_samples);

/// Product-norm contraction factor: max over nonzero sigma_i of {|1 - alpha sigma_i^2|, |1 - beta sigma_i^2|}.
double lemma1_delta(const SvdSummary& svd, double alpha, double beta);

struct Lemma1Result {
    double delta = 0.0;
    /// max over u and i of ||(I - beta A^T A)^i (I - alpha A^T A)^(k-i) u|| / (delta^k ||u||).
    double worst_ratio = 0.0;
    bool all_pass = true;
};
Lemma1Result lemma1_check(const SvdSummary& svd, double alpha, double beta, int k, Rng& rng, int num_vectors = 1);

struct RateReport {
    Family family = Family::BRSI;
    /// Stepsizes and lambdas in canonical form (selection scale^2 applied in the step).
    double alpha_r = 0.0;
    double alpha_c = 0.0;
    double lambda_max_r = 0.0;
    double lambda_max_c = 0.0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double eps = 1.0;
    double eta_r = 1.0;
    double eta_c = 1.0;
    double eta_eps = 1.0;
    double delta = 1.0;
    double gamma = 0.0;
    double gamma_stderr = 0.0;
    double horizon = 0.0;
    /// Doubly stochastic constants.
    double beta = 0.0;
    double eta_dsbi = 1.0;
    Provenance lambda_r_provenance = Provenance::NotApplicable;
    Provenance lambda_c_provenance = Provenance::NotApplicable;
    Provenance gamma_provenance = Provenance::NotApplicable;
    Provenance beta_provenance = Provenance::NotApplicable;
    bool convergent_r = true;
    bool convergent_c = true;
    bool consistent = true;
    std::vector<std::string> warnings;

    /// key=value lines for CSV headers.
    std::vector<std::pair<std::string, std::string>> fields() const;
};

/// eta = 1 - alpha (2 - alpha lambda) sigma^2.
double eta_rate(double alpha, double lambda, double sigma_min);

struct RateOptions {
    double eps = 1.0;
    std::size_t enumeration_limit = BoundSketch::kDefaultEnumerationLimit;
    std::size_t mc_samples = 20000;
    std::uint64_t seed = 0;
    std::optional<index_t> num_probe_sets;
};

/// Factor c with alpha_canonical = c * alpha for a spec's row or column stepsize.
double canonical_factor(const SketchSpec& spec, const Matrix& a, bool absorb_scale);

/// Fill every constant that applies to the spec's family. Uses exact enumeration when the
/// support allows, otherwise lambda_hat and Monte Carlo, and records the provenance.
RateReport rate_report(const ProblemInstance& p, const SolverSpec& spec, const RateOptions& opts = {});

enum class BoundKind {
    RowConsistent,    // eta_r^k e0
    RowInconsistent,  // eta_eps^k e0 + horizon (1 - eta_eps^k)
    Column,           // eta_c^k e0 (image-space error)
    Doubly,           // eta^k e0 + alpha (1 + 1/eps) gamma (1 - eta^k) / (2 sigma^2 - (1 + eps) alpha beta)
    Extended,         // (1+eps)^k eta_r^k e0 + (1 + 1/eps) alpha_r^2 lambda_r z0err sum_i eta_c^(k-i) ((1+eps) eta_r)^i
};

struct BoundCurve {
    std::vector<double> values;
    bool divergent = false;
};

BoundCurve bound_curve(const RateReport& r, BoundKind kind, double x0_err, std::size_t k_max, double z0_err = 0.0);

/// sum_{i<k} eta_c^(k-i) q^i for k = 0..k_max.
std::vector<double> extended_sum(double eta_c, double q, std::size_t k_max);

// Closed-form expectations of the error e^k = x^k - x*^0, used as test oracles.

/// (I - alpha A^T A)^k e0.
Vector expected_error_dsbi(const DenseMatrix& a, double alpha, std::span<const double> e0, int k);
/// (I - a_r A^T A)^k e0 - a_r sum_{i<k} (I - a_r A^T A)^i (I - a_c A^T A)^(k-i) A^T z0.
Vector expected_error_ebrsi(const DenseMatrix& a, double alpha_r, double alpha_c, std::span<const double> e0,
                            std::span<const double> z0, int k);
/// Same with + a_r and A^T (A z0 - b).
Vector expected_error_ebcrsi(const DenseMatrix& a, std::span<const double> b, double alpha_r, double alpha_c,
                             std::span<const double> e0, std::span<const double> z0, int k);

}  // namespace rbi
