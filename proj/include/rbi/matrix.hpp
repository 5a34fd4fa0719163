#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rbi {

using index_t = std::int64_t;
using Vector = std::vector<double>;
using IndexSet = std::vector<index_t>;
using DenseMatrix = Eigen::MatrixXd;

/// Thrown for dimension mismatches, out-of-range indices and other malformed arguments.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Compressed sparse row arrays. `offsets` has n_rows + 1 entries.
struct CsrArrays {
    std::vector<index_t> offsets;
    std::vector<index_t> indices;
    std::vector<double> values;
};

/// Triplet used when assembling sparse matrices. Duplicates are summed.
struct Triplet {
    index_t row;
    index_t col;
    double value;
};

/// Real m x n matrix, either dense row-major or sparse.
///
/// Sparse matrices keep a CSR array for row access and a CSC mirror
/// (stored as the CSR of the transpose) for column access, so both row-block
/// and column-block products cost O(nnz of the block). Immutable after
/// construction.
class Matrix {
  public:
    enum class Storage { Dense, Sparse };

    Matrix() = default;

    static Matrix dense(index_t rows, index_t cols, std::vector<double> row_major);
    static Matrix from_eigen(const DenseMatrix& a);
    static Matrix identity(index_t n);
    static Matrix from_triplets(index_t rows, index_t cols, std::vector<Triplet> triplets);
    static Matrix from_csr(index_t rows, index_t cols, CsrArrays csr);

    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    Storage storage() const { return storage_; }
    bool is_sparse() const { return storage_ == Storage::Sparse; }
    std::size_t nnz() const;

    double entry(index_t i, index_t j) const;

    const CsrArrays& csr() const { return csr_; }
    const CsrArrays& csc() const { return csc_; }
    std::span<const double> dense_data() const { return dense_; }

    DenseMatrix to_dense() const;
    std::vector<Triplet> triplets() const;

    Vector row_norms_sq() const;
    Vector col_norms_sq() const;
    double frobenius_sq() const;

    /// Number of stored entries in the given rows (all n_cols per row when dense).
    std::size_t row_block_nnz(std::span<const index_t> rows) const;
    std::size_t col_block_nnz(std::span<const index_t> cols) const;

    DenseMatrix row_block_dense(std::span<const index_t> rows) const;
    DenseMatrix col_block_dense(std::span<const index_t> cols) const;

    /// Structural check: offsets monotone, indices sorted and in range, CSC mirrors CSR.
    void check_invariants() const;

  private:
    index_t rows_ = 0;
    index_t cols_ = 0;
    Storage storage_ = Storage::Dense;
    std::vector<double> dense_;
    CsrArrays csr_;
    CsrArrays csc_;
};

// Kernels. All validate dimensions and throw InvalidInput on mismatch.

/// y = A x
Vector mat_vec(const Matrix& a, std::span<const double> x);
/// y = A^T x
Vector mat_vec_transpose(const Matrix& a, std::span<const double> x);

/// A_{I,:} x, touching only the rows in I.
Vector row_block_apply(const Matrix& a, std::span<const index_t> rows, std::span<const double> x);
/// (A_{I,:})^T y scattered into an n-vector.
Vector row_block_apply_transpose(const Matrix& a, std::span<const index_t> rows, std::span<const double> y);
/// out += scale * (A_{I,:})^T y without allocating.
void row_block_apply_transpose_add(const Matrix& a, std::span<const index_t> rows, std::span<const double> y,
                                   double scale, std::span<double> out);

/// A_{:,J} w (an m-vector).
Vector col_block_apply(const Matrix& a, std::span<const index_t> cols, std::span<const double> w);
/// out += scale * A_{:,J} w without allocating.
void col_block_apply_add(const Matrix& a, std::span<const index_t> cols, std::span<const double> w, double scale,
                         std::span<double> out);
/// (A_{:,J})^T y, a |J|-vector.
Vector col_block_apply_transpose(const Matrix& a, std::span<const index_t> cols, std::span<const double> y);

/// Validate an index set against [0, dim): in range and duplicate-free.
void check_index_set(std::span<const index_t> set, index_t dim, const char* what);

// Small vector helpers shared by the solvers and theory code.
double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);
double norm(std::span<const double> a);
double dist_sq(std::span<const double> a, std::span<const double> b);
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);  // alpha*x + y

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v);
Vector to_vector(const Eigen::VectorXd& v);

}  // namespace rbi
