#include "rbi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace rbi {

double svd_flop_estimate(index_t rows, index_t cols) {
    const double k = static_cast<double>(std::min(rows, cols));
    return k * k * k;
}

SvdSummary svd_summary(const Matrix& a, const SvdOptions& opts) {
    SvdSummary out;
    out.rows = a.rows();
    out.cols = a.cols();
    const double flops = svd_flop_estimate(a.rows(), a.cols());
    if (flops > opts.flop_ceiling) {
        std::ostringstream os;
        os << "dense SVD of a " << a.rows() << "x" << a.cols() << " matrix (~" << flops
           << " flops) exceeds the ceiling of " << opts.flop_ceiling
           << "; supply rank and reference-solution metadata instead";
        throw SvdTooLarge(os.str());
    }
    if (a.rows() == 0 || a.cols() == 0) return out;

    const DenseMatrix dense = a.to_dense();
    Eigen::BDCSVD<DenseMatrix> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    out.singular_values = to_vector(s);
    const double eps = std::numeric_limits<double>::epsilon();
    const double tol = (s.size() > 0 ? s(0) : 0.0) * static_cast<double>(std::max(a.rows(), a.cols())) * eps *
                       opts.rank_tol_factor;
    index_t rank = 0;
    while (rank < s.size() && s(rank) > tol && s(rank) > 0.0) ++rank;
    out.rank = rank;
    out.left_basis = svd.matrixU().leftCols(rank);
    out.right_basis = svd.matrixV().leftCols(rank);
    out.singular_values.resize(static_cast<std::size_t>(rank));
    return out;
}

SvdSummary svd_from_factors(const DenseMatrix& u, std::span<const double> d, const DenseMatrix& v) {
    if (u.cols() != static_cast<Eigen::Index>(d.size()) || v.cols() != static_cast<Eigen::Index>(d.size()))
        throw InvalidInput("svd_from_factors: factor shapes disagree");
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
    SvdSummary out;
    out.rows = u.rows();
    out.cols = v.rows();
    out.left_basis.resize(u.rows(), static_cast<Eigen::Index>(d.size()));
    out.right_basis.resize(v.rows(), static_cast<Eigen::Index>(d.size()));
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (d[order[k]] <= 0.0) break;
        out.singular_values.push_back(d[order[k]]);
        out.left_basis.col(static_cast<Eigen::Index>(k)) = u.col(static_cast<Eigen::Index>(order[k]));
        out.right_basis.col(static_cast<Eigen::Index>(k)) = v.col(static_cast<Eigen::Index>(order[k]));
    }
    out.rank = static_cast<index_t>(out.singular_values.size());
    out.left_basis.conservativeResize(Eigen::NoChange, out.rank);
    out.right_basis.conservativeResize(Eigen::NoChange, out.rank);
    return out;
}

Vector pinv_apply(const SvdSummary& svd, std::span<const double> b) {
    if (b.size() != static_cast<std::size_t>(svd.rows)) throw InvalidInput("pinv_apply: rhs length mismatch");
    if (svd.rank == 0) return Vector(static_cast<std::size_t>(svd.cols), 0.0);
    Eigen::VectorXd c = svd.left_basis.transpose() * as_eigen(b);
    for (index_t k = 0; k < svd.rank; ++k) c(k) /= svd.singular_values[static_cast<std::size_t>(k)];
    return to_vector(svd.right_basis * c);
}

Vector min_norm_lsq(const Matrix& a, std::span<const double> b, const SvdOptions& opts) {
    if (b.size() != static_cast<std::size_t>(a.rows())) throw InvalidInput("min_norm_lsq: rhs length mismatch");
    return pinv_apply(svd_summary(a, opts), b);
}

namespace {

Vector project(const DenseMatrix& basis, index_t dim, std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(dim)) throw InvalidInput("projection: vector length mismatch");
    if (basis.cols() == 0) return Vector(v.size(), 0.0);
    const Eigen::VectorXd c = basis.transpose() * as_eigen(v);
    return to_vector(basis * c);
}

Vector complement(std::span<const double> v, const Vector& p) {
    Vector out(v.begin(), v.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= p[i];
    return out;
}

}  // namespace

Vector project_rowspace(const SvdSummary& svd, std::span<const double> v) {
    return project(svd.right_basis, svd.cols, v);
}

Vector project_colspace(const SvdSummary& svd, std::span<const double> v) {
    return project(svd.left_basis, svd.rows, v);
}

Vector project_left_nullspace(const SvdSummary& svd, std::span<const double> v) {
    return complement(v, project_colspace(svd, v));
}

Vector project_nullspace(const SvdSummary& svd, std::span<const double> v) {
    return complement(v, project_rowspace(svd, v));
}

namespace {

// Power iteration on the Gram matrix G = B B^T of a block B, in the block's
// small dimension; `apply_gram` computes G v through the block kernels.
template <class Gram>
PowerIterationResult power_iterate(std::size_t dim, Gram apply_gram, double rel_tol, int max_iter) {
    PowerIterationResult res;
    if (dim == 0) {
        res.converged = true;
        return res;
    }
    Vector v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    double prev = -1.0;
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = apply_gram(v);
        const double lambda = dot(v, w);
        const double nw = norm(w);
        res.value = lambda;
        res.iterations = it;
        if (nw == 0.0) {
            res.value = 0.0;
            res.converged = true;
            return res;
        }
        if (prev >= 0.0 && std::abs(lambda - prev) <= rel_tol * std::abs(lambda)) {
            res.converged = true;
            return res;
        }
        prev = lambda;
        for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / nw;
    }
    return res;
}

}  // namespace

PowerIterationResult row_block_spectral_norm_sq(const Matrix& a, std::span<const index_t> rows, double rel_tol,
                                                int max_iter) {
    auto gram = [&](const Vector& v) { return row_block_apply(a, rows, row_block_apply_transpose(a, rows, v)); };
    return power_iterate(rows.size(), gram, rel_tol, max_iter);
}

PowerIterationResult col_block_spectral_norm_sq(const Matrix& a, std::span<const index_t> cols, double rel_tol,
                                                int max_iter) {
    auto gram = [&](const Vector& v) { return col_block_apply_transpose(a, cols, col_block_apply(a, cols, v)); };
    return power_iterate(cols.size(), gram, rel_tol, max_iter);
}

double symmetric_lambda_max(const DenseMatrix& h) {
    if (h.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double spectral_norm_sq(const DenseMatrix& b) {
    if (b.size() == 0) return 0.0;
    if (b.rows() <= b.cols()) return symmetric_lambda_max(b * b.transpose());
    return symmetric_lambda_max(b.transpose() * b);
}

}  // namespace rbi
