#include "rbi/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rbi {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

std::string dims(index_t r, index_t c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

// Transpose CSR arrays of a rows x cols matrix into CSR of the cols x rows transpose.
CsrArrays transpose_csr(index_t rows, index_t cols, const CsrArrays& in) {
    CsrArrays out;
    out.offsets.assign(static_cast<std::size_t>(cols) + 1, 0);
    for (index_t j : in.indices) ++out.offsets[static_cast<std::size_t>(j) + 1];
    std::partial_sum(out.offsets.begin(), out.offsets.end(), out.offsets.begin());
    out.indices.resize(in.indices.size());
    out.values.resize(in.values.size());
    std::vector<index_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (index_t i = 0; i < rows; ++i) {
        for (index_t p = in.offsets[i]; p < in.offsets[i + 1]; ++p) {
            const auto dst = cursor[in.indices[p]]++;
            out.indices[dst] = i;
            out.values[dst] = in.values[p];
        }
    }
    return out;
}

}  // namespace

Matrix Matrix::dense(index_t rows, index_t cols, std::vector<double> row_major) {
    require(rows >= 0 && cols >= 0, "negative matrix dimension");
    require(row_major.size() == static_cast<std::size_t>(rows * cols),
            "dense data length does not match " + dims(rows, cols));
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.storage_ = Storage::Dense;
    m.dense_ = std::move(row_major);
    return m;
}

Matrix Matrix::from_eigen(const DenseMatrix& a) {
    std::vector<double> data(static_cast<std::size_t>(a.rows() * a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) data[static_cast<std::size_t>(i * a.cols() + j)] = a(i, j);
    return dense(a.rows(), a.cols(), std::move(data));
}

Matrix Matrix::identity(index_t n) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
}

Matrix Matrix::from_triplets(index_t rows, index_t cols, std::vector<Triplet> triplets) {
    require(rows >= 0 && cols >= 0, "negative matrix dimension");
    for (const auto& t : triplets) {
        require(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols,
                "triplet index out of range for " + dims(rows, cols));
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    CsrArrays csr;
    csr.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (!csr.indices.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
            csr.values.back() += t.value;
            continue;
        }
        csr.indices.push_back(t.col);
        csr.values.push_back(t.value);
        ++csr.offsets[static_cast<std::size_t>(t.row) + 1];
    }
    std::partial_sum(csr.offsets.begin(), csr.offsets.end(), csr.offsets.begin());
    return from_csr(rows, cols, std::move(csr));
}

Matrix Matrix::from_csr(index_t rows, index_t cols, CsrArrays csr) {
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.storage_ = Storage::Sparse;
    m.csr_ = std::move(csr);
    require(m.csr_.offsets.size() == static_cast<std::size_t>(rows) + 1, "CSR offsets length must be rows + 1");
    require(m.csr_.indices.size() == m.csr_.values.size(), "CSR indices/values length mismatch");
    m.csc_ = transpose_csr(rows, cols, m.csr_);
    m.check_invariants();
    return m;
}

std::size_t Matrix::nnz() const {
    return storage_ == Storage::Dense ? dense_.size() : csr_.values.size();
}

double Matrix::entry(index_t i, index_t j) const {
    require(i >= 0 && i < rows_ && j >= 0 && j < cols_, "entry index out of range");
    if (storage_ == Storage::Dense) return dense_[static_cast<std::size_t>(i * cols_ + j)];
    const auto first = csr_.indices.begin() + csr_.offsets[i];
    const auto last = csr_.indices.begin() + csr_.offsets[i + 1];
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return csr_.values[static_cast<std::size_t>(it - csr_.indices.begin())];
}

DenseMatrix Matrix::to_dense() const {
    DenseMatrix a = DenseMatrix::Zero(rows_, cols_);
    if (storage_ == Storage::Dense) {
        for (index_t i = 0; i < rows_; ++i)
            for (index_t j = 0; j < cols_; ++j) a(i, j) = dense_[static_cast<std::size_t>(i * cols_ + j)];
    } else {
        for (index_t i = 0; i < rows_; ++i)
            for (index_t p = csr_.offsets[i]; p < csr_.offsets[i + 1]; ++p) a(i, csr_.indices[p]) = csr_.values[p];
    }
    return a;
}

std::vector<Triplet> Matrix::triplets() const {
    std::vector<Triplet> out;
    if (storage_ == Storage::Dense) {
        for (index_t i = 0; i < rows_; ++i)
            for (index_t j = 0; j < cols_; ++j) {
                const double v = dense_[static_cast<std::size_t>(i * cols_ + j)];
                if (v != 0.0) out.push_back({i, j, v});
            }
    } else {
        out.reserve(csr_.values.size());
        for (index_t i = 0; i < rows_; ++i)
            for (index_t p = csr_.offsets[i]; p < csr_.offsets[i + 1]; ++p)
                out.push_back({i, csr_.indices[p], csr_.values[p]});
    }
    return out;
}

Vector Matrix::row_norms_sq() const {
    Vector out(static_cast<std::size_t>(rows_), 0.0);
    if (storage_ == Storage::Dense) {
        for (index_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (index_t j = 0; j < cols_; ++j) {
                const double v = dense_[static_cast<std::size_t>(i * cols_ + j)];
                s += v * v;
            }
            out[i] = s;
        }
    } else {
        for (index_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (index_t p = csr_.offsets[i]; p < csr_.offsets[i + 1]; ++p) s += csr_.values[p] * csr_.values[p];
            out[i] = s;
        }
    }
    return out;
}

Vector Matrix::col_norms_sq() const {
    Vector out(static_cast<std::size_t>(cols_), 0.0);
    if (storage_ == Storage::Dense) {
        for (index_t i = 0; i < rows_; ++i)
            for (index_t j = 0; j < cols_; ++j) {
                const double v = dense_[static_cast<std::size_t>(i * cols_ + j)];
                out[j] += v * v;
            }
    } else {
        for (index_t j = 0; j < cols_; ++j) {
            double s = 0.0;
            for (index_t p = csc_.offsets[j]; p < csc_.offsets[j + 1]; ++p) s += csc_.values[p] * csc_.values[p];
            out[j] = s;
        }
    }
    return out;
}

double Matrix::frobenius_sq() const {
    const auto r = row_norms_sq();
    return std::accumulate(r.begin(), r.end(), 0.0);
}

std::size_t Matrix::row_block_nnz(std::span<const index_t> rows) const {
    if (storage_ == Storage::Dense) return rows.size() * static_cast<std::size_t>(cols_);
    std::size_t s = 0;
    for (index_t i : rows) s += static_cast<std::size_t>(csr_.offsets[i + 1] - csr_.offsets[i]);
    return s;
}

std::size_t Matrix::col_block_nnz(std::span<const index_t> cols) const {
    if (storage_ == Storage::Dense) return cols.size() * static_cast<std::size_t>(rows_);
    std::size_t s = 0;
    for (index_t j : cols) s += static_cast<std::size_t>(csc_.offsets[j + 1] - csc_.offsets[j]);
    return s;
}

DenseMatrix Matrix::row_block_dense(std::span<const index_t> rows) const {
    check_index_set(rows, rows_, "row");
    DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(rows.size()), cols_);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const index_t i = rows[k];
        if (storage_ == Storage::Dense) {
            for (index_t j = 0; j < cols_; ++j) out(k, j) = dense_[static_cast<std::size_t>(i * cols_ + j)];
        } else {
            for (index_t p = csr_.offsets[i]; p < csr_.offsets[i + 1]; ++p) out(k, csr_.indices[p]) = csr_.values[p];
        }
    }
    return out;
}

DenseMatrix Matrix::col_block_dense(std::span<const index_t> cols) const {
    check_index_set(cols, cols_, "column");
    DenseMatrix out = DenseMatrix::Zero(rows_, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        const index_t j = cols[k];
        if (storage_ == Storage::Dense) {
            for (index_t i = 0; i < rows_; ++i) out(i, k) = dense_[static_cast<std::size_t>(i * cols_ + j)];
        } else {
            for (index_t p = csc_.offsets[j]; p < csc_.offsets[j + 1]; ++p) out(csc_.indices[p], k) = csc_.values[p];
        }
    }
    return out;
}

void Matrix::check_invariants() const {
    if (storage_ == Storage::Dense) {
        require(dense_.size() == static_cast<std::size_t>(rows_ * cols_), "dense storage size mismatch");
        return;
    }
    auto check = [](const CsrArrays& a, index_t outer, index_t inner, const char* name) {
        require(a.offsets.size() == static_cast<std::size_t>(outer) + 1, std::string(name) + ": bad offsets length");
        require(a.offsets.front() == 0, std::string(name) + ": first offset must be 0");
        require(a.offsets.back() == static_cast<index_t>(a.indices.size()),
                std::string(name) + ": final offset must equal nnz");
        for (index_t i = 0; i < outer; ++i) {
            require(a.offsets[i] <= a.offsets[i + 1], std::string(name) + ": offsets must be nondecreasing");
            for (index_t p = a.offsets[i]; p < a.offsets[i + 1]; ++p) {
                require(a.indices[p] >= 0 && a.indices[p] < inner, std::string(name) + ": index out of range");
                if (p > a.offsets[i])
                    require(a.indices[p - 1] < a.indices[p], std::string(name) + ": indices must strictly increase");
            }
        }
    };
    check(csr_, rows_, cols_, "CSR");
    check(csc_, cols_, rows_, "CSC");
    require(csr_.values.size() == csc_.values.size(), "CSR and CSC mirrors disagree on nnz");
}

void check_index_set(std::span<const index_t> set, index_t dim, const char* what) {
    std::vector<bool> seen(static_cast<std::size_t>(dim), false);
    for (index_t i : set) {
        if (i < 0 || i >= dim) {
            std::ostringstream os;
            os << what << " index " << i << " out of range [0, " << dim << ")";
            throw InvalidInput(os.str());
        }
        if (seen[i]) {
            std::ostringstream os;
            os << "duplicate " << what << " index " << i;
            throw InvalidInput(os.str());
        }
        seen[i] = true;
    }
}

namespace {

void check_len(std::size_t got, index_t want, const char* what) {
    if (got != static_cast<std::size_t>(want)) {
        std::ostringstream os;
        os << what << ": expected length " << want << ", got " << got;
        throw InvalidInput(os.str());
    }
}

void check_in_range(std::span<const index_t> set, index_t dim, const char* what) {
    for (index_t i : set) {
        if (i < 0 || i >= dim) {
            std::ostringstream os;
            os << what << " index " << i << " out of range [0, " << dim << ")";
            throw InvalidInput(os.str());
        }
    }
}

inline double row_dot(const Matrix& a, index_t i, std::span<const double> x) {
    double s = 0.0;
    if (!a.is_sparse()) {
        const auto d = a.dense_data();
        const auto n = a.cols();
        const double* row = d.data() + i * n;
        for (index_t j = 0; j < n; ++j) s += row[j] * x[j];
    } else {
        const auto& c = a.csr();
        for (index_t p = c.offsets[i]; p < c.offsets[i + 1]; ++p) s += c.values[p] * x[c.indices[p]];
    }
    return s;
}

inline void row_axpy(const Matrix& a, index_t i, double coef, std::span<double> out) {
    if (!a.is_sparse()) {
        const auto d = a.dense_data();
        const auto n = a.cols();
        const double* row = d.data() + i * n;
        for (index_t j = 0; j < n; ++j) out[j] += coef * row[j];
    } else {
        const auto& c = a.csr();
        for (index_t p = c.offsets[i]; p < c.offsets[i + 1]; ++p) out[c.indices[p]] += coef * c.values[p];
    }
}

}  // namespace

Vector mat_vec(const Matrix& a, std::span<const double> x) {
    check_len(x.size(), a.cols(), "mat_vec");
    Vector y(static_cast<std::size_t>(a.rows()));
    for (index_t i = 0; i < a.rows(); ++i) y[i] = row_dot(a, i, x);
    return y;
}

Vector mat_vec_transpose(const Matrix& a, std::span<const double> x) {
    check_len(x.size(), a.rows(), "mat_vec_transpose");
    Vector y(static_cast<std::size_t>(a.cols()), 0.0);
    for (index_t i = 0; i < a.rows(); ++i)
        if (x[i] != 0.0) row_axpy(a, i, x[i], y);
    return y;
}

Vector row_block_apply(const Matrix& a, std::span<const index_t> rows, std::span<const double> x) {
    check_len(x.size(), a.cols(), "row_block_apply");
    check_in_range(rows, a.rows(), "row");
    Vector y(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) y[k] = row_dot(a, rows[k], x);
    return y;
}

void row_block_apply_transpose_add(const Matrix& a, std::span<const index_t> rows, std::span<const double> y,
                                   double scale, std::span<double> out) {
    check_len(y.size(), static_cast<index_t>(rows.size()), "row_block_apply_transpose");
    check_len(out.size(), a.cols(), "row_block_apply_transpose output");
    check_in_range(rows, a.rows(), "row");
    for (std::size_t k = 0; k < rows.size(); ++k) row_axpy(a, rows[k], scale * y[k], out);
}

Vector row_block_apply_transpose(const Matrix& a, std::span<const index_t> rows, std::span<const double> y) {
    Vector out(static_cast<std::size_t>(a.cols()), 0.0);
    row_block_apply_transpose_add(a, rows, y, 1.0, out);
    return out;
}

void col_block_apply_add(const Matrix& a, std::span<const index_t> cols, std::span<const double> w, double scale,
                         std::span<double> out) {
    check_len(w.size(), static_cast<index_t>(cols.size()), "col_block_apply");
    check_len(out.size(), a.rows(), "col_block_apply output");
    check_in_range(cols, a.cols(), "column");
    if (a.is_sparse()) {
        const auto& c = a.csc();
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double coef = scale * w[k];
            const index_t j = cols[k];
            for (index_t p = c.offsets[j]; p < c.offsets[j + 1]; ++p) out[c.indices[p]] += coef * c.values[p];
        }
    } else {
        const auto d = a.dense_data();
        const auto n = a.cols();
        for (index_t i = 0; i < a.rows(); ++i) {
            const double* row = d.data() + i * n;
            double s = 0.0;
            for (std::size_t k = 0; k < cols.size(); ++k) s += row[cols[k]] * w[k];
            out[i] += scale * s;
        }
    }
}

Vector col_block_apply(const Matrix& a, std::span<const index_t> cols, std::span<const double> w) {
    Vector out(static_cast<std::size_t>(a.rows()), 0.0);
    col_block_apply_add(a, cols, w, 1.0, out);
    return out;
}

Vector col_block_apply_transpose(const Matrix& a, std::span<const index_t> cols, std::span<const double> y) {
    check_len(y.size(), a.rows(), "col_block_apply_transpose");
    check_in_range(cols, a.cols(), "column");
    Vector out(cols.size(), 0.0);
    if (a.is_sparse()) {
        const auto& c = a.csc();
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const index_t j = cols[k];
            double s = 0.0;
            for (index_t p = c.offsets[j]; p < c.offsets[j + 1]; ++p) s += c.values[p] * y[c.indices[p]];
            out[k] = s;
        }
    } else {
        const auto d = a.dense_data();
        const auto n = a.cols();
        for (index_t i = 0; i < a.rows(); ++i) {
            const double yi = y[i];
            if (yi == 0.0) continue;
            const double* row = d.data() + i * n;
            for (std::size_t k = 0; k < cols.size(); ++k) out[k] += row[cols[k]] * yi;
        }
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidInput("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

double dist_sq(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidInput("dist_sq: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("axpy: length mismatch");
    Vector out(y.begin(), y.end());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
    return out;
}

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

Vector to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace rbi
