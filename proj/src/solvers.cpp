#include "rbi/solvers.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

namespace rbi {

const char* family_name(Family f) {
    switch (f) {
        case Family::DSBI: return "DSBI";
        case Family::BRSI: return "BRSI";
        case Family::BCSI: return "BCSI";
        case Family::EBRSI: return "EBRSI";
        case Family::EBCRSI: return "EBCRSI";
    }
    return "?";
}

Family parse_family(const std::string& name) {
    for (Family f : {Family::DSBI, Family::BRSI, Family::BCSI, Family::EBRSI, Family::EBCRSI})
        if (name == family_name(f)) return f;
    throw InvalidInput("unknown solver family '" + name + "'");
}

void SolverSpec::validate() const {
    auto need = [&](bool ok, const char* what) {
        if (!ok) throw InvalidInput(std::string(family_name(family)) + ": " + what);
    };
    if (family == Family::BCSI)
        need(alpha_c > 0.0 && std::isfinite(alpha_c), "alpha_c must be positive");
    else
        need(alpha_r > 0.0 && std::isfinite(alpha_r), "alpha_r must be positive");
    switch (family) {
        case Family::BRSI:
            need(row_sketch && !col_sketch, "needs a row sketch only");
            break;
        case Family::BCSI:
            need(col_sketch && !row_sketch, "needs a column sketch only");
            break;
        case Family::EBRSI:
        case Family::EBCRSI:
            need(row_sketch && col_sketch, "needs both a row and a column sketch");
            need(alpha_c > 0.0 && std::isfinite(alpha_c), "alpha_c must be positive");
            break;
        case Family::DSBI:
            need(row_sketch.has_value(), "needs a coupled EntryNormSq sketch or a row/column pair");
            if (std::holds_alternative<EntryNormSq>(row_sketch->kind))
                need(!col_sketch, "coupled EntryNormSq takes no separate column sketch");
            else
                need(col_sketch.has_value(), "independent pair needs a column sketch");
            break;
    }
    if (row_sketch && family != Family::DSBI) need(row_sketch->axis == Axis::Row, "row sketch must use the row axis");
    if (row_sketch && std::holds_alternative<EntryNormSq>(row_sketch->kind))
        need(family == Family::DSBI, "EntryNormSq is only valid for DSBI");
    if (col_sketch) need(col_sketch->axis == Axis::Column, "column sketch must use the column axis");
}

namespace {

double step_scale(const SketchRealization& s, bool absorb) { return absorb ? 1.0 : s.scale_sq(); }

std::uint64_t block_nnz_rows(const Matrix& a, const SketchRealization& s) {
    return s.is_dense() ? a.nnz() : a.row_block_nnz(s.indices);
}

std::uint64_t block_nnz_cols(const Matrix& a, const SketchRealization& s) {
    return s.is_dense() ? a.nnz() : a.col_block_nnz(s.indices);
}

/// S S^T v for a dense sketch.
Vector dense_project(const DenseMatrix& s, std::span<const double> v) {
    const Eigen::VectorXd y = s.transpose() * as_eigen(v);
    return to_vector(s * y);
}

/// x -= alpha * A^T S S^T v_I, where v_I is the row-restricted residual already computed by the caller.
void row_correction(SolverState& st, const Matrix& a, const SketchRealization& row, std::span<const double> res,
                    double alpha, bool absorb) {
    if (row.is_dense()) {
        const Vector w = dense_project(row.dense, res);
        const Vector g = mat_vec_transpose(a, w);
        for (std::size_t j = 0; j < g.size(); ++j) st.x[j] -= alpha * g[j];
        st.touched += a.nnz();
    } else {
        row_block_apply_transpose_add(a, row.indices, res, -alpha * step_scale(row, absorb), st.x);
        st.touched += block_nnz_rows(a, row);
    }
}

/// One BCSI step on (v, r = b - A v): w = alpha T T^T A^T r, v += w, r -= A w.
void column_update(const Matrix& a, const SketchRealization& col, double alpha, bool absorb, Vector& v, Vector& r,
                   std::uint64_t& touched) {
    if (col.is_dense()) {
        const Vector g = mat_vec_transpose(a, r);
        Vector w = dense_project(col.dense, g);
        for (auto& wi : w) wi *= alpha;
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += w[j];
        const Vector aw = mat_vec(a, w);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= aw[i];
        touched += 2 * a.nnz();
        return;
    }
    Vector w = col_block_apply_transpose(a, col.indices, r);
    const double s = alpha * step_scale(col, absorb);
    for (auto& wi : w) wi *= s;
    for (std::size_t k = 0; k < col.indices.size(); ++k) v[static_cast<std::size_t>(col.indices[k])] += w[k];
    col_block_apply_add(a, col.indices, w, -1.0, r);
    touched += 2 * block_nnz_cols(a, col);
}

}  // namespace

void brsi_step(SolverState& s, const Matrix& a, std::span<const double> b, const SketchRealization& row,
               double alpha_r, bool absorb) {
    if (row.is_dense()) {
        Vector res = mat_vec(a, s.x);
        for (std::size_t i = 0; i < res.size(); ++i) res[i] -= b[i];
        s.touched += a.nnz();
        row_correction(s, a, row, res, alpha_r, absorb);
    } else {
        Vector res = row_block_apply(a, row.indices, s.x);
        for (std::size_t k = 0; k < res.size(); ++k) res[k] -= b[static_cast<std::size_t>(row.indices[k])];
        s.touched += block_nnz_rows(a, row);
        row_correction(s, a, row, res, alpha_r, absorb);
    }
    ++s.iter_count;
}

void bcsi_step(SolverState& s, const Matrix& a, const SketchRealization& col, double alpha_c, bool absorb) {
    column_update(a, col, alpha_c, absorb, s.x, s.r, s.touched);
    ++s.iter_count;
}

void ebrsi_step(SolverState& s, const Matrix& a, std::span<const double> b, const SketchRealization& row,
                const SketchRealization& col, double alpha_r, double alpha_c, bool absorb) {
    // z <- z - alpha_c A T T^T A^T z
    if (col.is_dense()) {
        const Vector g = mat_vec_transpose(a, s.z);
        const Vector w = dense_project(col.dense, g);
        const Vector aw = mat_vec(a, w);
        for (std::size_t i = 0; i < s.z.size(); ++i) s.z[i] -= alpha_c * aw[i];
        s.touched += 2 * a.nnz();
    } else {
        const Vector t = col_block_apply_transpose(a, col.indices, s.z);
        col_block_apply_add(a, col.indices, t, -alpha_c * step_scale(col, absorb), s.z);
        s.touched += 2 * block_nnz_cols(a, col);
    }
    // x <- x - alpha_r A^T S S^T (A x - b + z)
    if (row.is_dense()) {
        Vector res = mat_vec(a, s.x);
        for (std::size_t i = 0; i < res.size(); ++i) res[i] += s.z[i] - b[i];
        s.touched += a.nnz();
        row_correction(s, a, row, res, alpha_r, absorb);
    } else {
        Vector res = row_block_apply(a, row.indices, s.x);
        for (std::size_t k = 0; k < res.size(); ++k) {
            const auto i = static_cast<std::size_t>(row.indices[k]);
            res[k] += s.z[i] - b[i];
        }
        s.touched += block_nnz_rows(a, row);
        row_correction(s, a, row, res, alpha_r, absorb);
    }
    ++s.iter_count;
}

void ebcrsi_step(SolverState& s, const Matrix& a, const SketchRealization& row, const SketchRealization& col,
                 double alpha_r, double alpha_c, bool absorb) {
    // z <- z - alpha_c T T^T A^T (A z - b), with r = b - A z maintained.
    column_update(a, col, alpha_c, absorb, s.z, s.r, s.touched);
    // x <- x - alpha_r A^T S S^T A (x - z)
    Vector res = row.is_dense() ? mat_vec(a, s.x) : row_block_apply(a, row.indices, s.x);
    const Vector az = row.is_dense() ? mat_vec(a, s.z) : row_block_apply(a, row.indices, s.z);
    for (std::size_t k = 0; k < res.size(); ++k) res[k] -= az[k];
    s.touched += block_nnz_rows(a, row);
    row_correction(s, a, row, res, alpha_r, absorb);
    ++s.iter_count;
}

void dsbi_step(SolverState& s, const Matrix& a, std::span<const double> b, const CoupledRealization& st, double alpha,
               bool absorb) {
    const auto& S = st.row;
    const auto& T = st.col;
    if (S.is_dense() || T.is_dense()) {
        Vector v = mat_vec(a, s.x);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b[i];
        if (S.is_dense()) {
            v = dense_project(S.dense, v);
        } else {
            Vector masked(v.size(), 0.0);
            for (index_t i : S.indices) masked[static_cast<std::size_t>(i)] = step_scale(S, absorb) * v[i];
            v = std::move(masked);
        }
        Vector g = mat_vec_transpose(a, v);
        if (T.is_dense()) {
            g = dense_project(T.dense, g);
        } else {
            Vector masked(g.size(), 0.0);
            for (index_t j : T.indices) masked[static_cast<std::size_t>(j)] = step_scale(T, absorb) * g[j];
            g = std::move(masked);
        }
        for (std::size_t j = 0; j < g.size(); ++j) s.x[j] -= alpha * g[j];
        s.touched += 2 * a.nnz();
        ++s.iter_count;
        return;
    }
    const double scale = alpha * step_scale(S, absorb) * step_scale(T, absorb);
    if (S.indices.size() == 1 && T.indices.size() == 1) {
        // Single entry (DSGS): x_j -= alpha sS^2 sT^2 A_ij (A_i x - b_i).
        const index_t i = S.indices[0];
        const index_t j = T.indices[0];
        const std::array<index_t, 1> row{i};
        const double ri = row_block_apply(a, row, s.x)[0] - b[static_cast<std::size_t>(i)];
        s.x[static_cast<std::size_t>(j)] -= scale * a.entry(i, j) * ri;
        s.touched += a.row_block_nnz(row) + 1;
        ++s.iter_count;
        return;
    }
    Vector res = row_block_apply(a, S.indices, s.x);
    for (std::size_t k = 0; k < res.size(); ++k) res[k] -= b[static_cast<std::size_t>(S.indices[k])];
    const Vector g = row_block_apply_transpose(a, S.indices, res);
    for (index_t j : T.indices) s.x[static_cast<std::size_t>(j)] -= scale * g[static_cast<std::size_t>(j)];
    s.touched += 2 * a.row_block_nnz(S.indices);
    ++s.iter_count;
}

Solver::Solver(const Matrix& a, std::span<const double> b, SolverSpec spec)
    : a_(&a), b_(b.begin(), b.end()), spec_(std::move(spec)) {
    spec_.validate();
    if (b_.size() != static_cast<std::size_t>(a.rows())) throw InvalidInput("rhs length does not match A");
    switch (spec_.family) {
        case Family::BRSI:
            row_.emplace(*spec_.row_sketch, a);
            epoch_ = row_->epoch_iterations();
            break;
        case Family::BCSI:
            col_.emplace(*spec_.col_sketch, a);
            epoch_ = col_->epoch_iterations();
            break;
        case Family::EBRSI:
        case Family::EBCRSI:
            row_.emplace(*spec_.row_sketch, a);
            col_.emplace(*spec_.col_sketch, a);
            epoch_ = std::max(row_->epoch_iterations(), col_->epoch_iterations());
            break;
        case Family::DSBI:
            if (std::holds_alternative<EntryNormSq>(spec_.row_sketch->kind)) {
                pair_ = PairSketch::coupled_entries(a);
                epoch_ = a.rows();
            } else {
                BoundSketch r(*spec_.row_sketch, a);
                epoch_ = r.epoch_iterations();
                pair_ = PairSketch::independent(std::move(r), BoundSketch(*spec_.col_sketch, a));
            }
            break;
    }
}

SolverState Solver::initial_state(std::optional<Vector> x0, std::optional<Vector> z0) const {
    const auto m = static_cast<std::size_t>(a_->rows());
    const auto n = static_cast<std::size_t>(a_->cols());
    SolverState s;
    s.x = x0 ? std::move(*x0) : Vector(n, 0.0);
    if (s.x.size() != n) throw InvalidInput("x0 length does not match A");
    switch (spec_.family) {
        case Family::BCSI: {
            const Vector ax = mat_vec(*a_, s.x);
            s.r.resize(m);
            for (std::size_t i = 0; i < m; ++i) s.r[i] = b_[i] - ax[i];
            break;
        }
        case Family::EBRSI:
            s.z = z0 ? std::move(*z0) : b_;
            if (s.z.size() != m) throw InvalidInput("z0 length must be m for EBRSI");
            break;
        case Family::EBCRSI: {
            s.z = z0 ? std::move(*z0) : Vector(n, 0.0);
            if (s.z.size() != n) throw InvalidInput("z0 length must be n for EBCRSI");
            const Vector az = mat_vec(*a_, s.z);
            s.r.resize(m);
            for (std::size_t i = 0; i < m; ++i) s.r[i] = b_[i] - az[i];
            break;
        }
        default: break;
    }
    return s;
}

void Solver::step(SolverState& s, Rng& row_rng, Rng& col_rng) const {
    const bool absorb = spec_.absorb_scale;
    switch (spec_.family) {
        case Family::BRSI: brsi_step(s, *a_, b_, row_->draw(row_rng), spec_.alpha_r, absorb); break;
        case Family::BCSI: bcsi_step(s, *a_, col_->draw(col_rng), spec_.alpha_c, absorb); break;
        case Family::EBRSI: {
            // Column draw first, matching the update order.
            const auto col = col_->draw(col_rng);
            ebrsi_step(s, *a_, b_, row_->draw(row_rng), col, spec_.alpha_r, spec_.alpha_c, absorb);
            break;
        }
        case Family::EBCRSI: {
            const auto col = col_->draw(col_rng);
            ebcrsi_step(s, *a_, row_->draw(row_rng), col, spec_.alpha_r, spec_.alpha_c, absorb);
            break;
        }
        case Family::DSBI: dsbi_step(s, *a_, b_, pair_->draw(row_rng, col_rng), spec_.alpha_r, absorb); break;
    }
}

double residual_drift(const SolverState& s, const Matrix& a, std::span<const double> b, Family family) {
    if (family != Family::BCSI && family != Family::EBCRSI) return 0.0;
    const Vector av = mat_vec(a, family == Family::BCSI ? s.x : s.z);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = s.r[i] - (b[i] - av[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

TrialStreams trial_streams(std::uint64_t master_seed, std::uint64_t trial, const std::string& label) {
    return {Rng::stream(master_seed, trial, hash_label((label + "/row").c_str())),
            Rng::stream(master_seed, trial, hash_label((label + "/col").c_str()))};
}

double relative_error(std::span<const double> x, std::span<const double> ref) {
    const double d = dist_sq(x, ref);
    const double r = norm_sq(ref);
    return r > 0.0 ? d / r : d;
}

RunRecord run(const ProblemInstance& p, const SolverSpec& spec, const StopRule& stop, std::uint64_t master_seed,
              std::uint64_t trial) {
    const Solver solver(p.a, p.b, spec);
    return run(solver, p, stop, master_seed, trial);
}

RunRecord run(const Solver& solver, const ProblemInstance& p, const StopRule& stop, std::uint64_t master_seed,
              std::uint64_t trial) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& spec = solver.spec();
    RunRecord rec;
    rec.solver_label = spec.label.empty() ? family_name(spec.family) : spec.label;
    rec.trial_index = trial;
    rec.seed = master_seed;
    rec.absolute_error = !(norm_sq(p.x_ref) > 0.0);

    auto streams = trial_streams(master_seed, trial, rec.solver_label);
    SolverState s = solver.initial_state();
    const auto len = static_cast<std::uint64_t>(solver.epoch_length());

    double err = relative_error(s.x, p.x_ref);
    rec.relerr_trace.push_back(err);
    while (err > stop.relerr_tol && s.epoch_count < stop.max_epochs) {
        for (std::uint64_t k = 0; k < len; ++k) solver.step(s, streams.row, streams.col);
        ++s.epoch_count;
        err = relative_error(s.x, p.x_ref);
        if (!std::isfinite(err)) {
            rec.relerr_trace.push_back(err);
            break;
        }
        rec.relerr_trace.push_back(err);
        rec.max_residual_drift = std::max(rec.max_residual_drift, residual_drift(s, p.a, p.b, spec.family));
    }
    rec.epochs = s.epoch_count;
    rec.iters = s.iter_count;
    rec.final_relerr = err;
    rec.converged = err <= stop.relerr_tol;
    rec.touched = s.touched;
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

namespace {

const std::vector<std::string>& named_list() {
    static const std::vector<std::string> names{"DSGS", "RK",   "RCD",  "REK",   "REABK",
                                                "REGS", "BRUS", "BCUS", "EBRUS", "EBCRUS"};
    return names;
}

index_t require_block(const NamedParams& p, const std::string& name) {
    if (!p.block) throw InvalidInput(name + " requires a block size");
    return *p.block;
}

double require_alpha(const NamedParams& p, const std::string& name) {
    if (!p.alpha) throw InvalidInput(name + " requires a stepsize alpha");
    return *p.alpha;
}

std::string with_block(const std::string& name, index_t l) { return name + "(" + std::to_string(l) + ")"; }

}  // namespace

bool is_named_spec(const std::string& name) {
    const auto& names = named_list();
    return std::find(names.begin(), names.end(), name) != names.end();
}

SolverSpec named_spec(const std::string& name, const Matrix& a, const NamedParams& p) {
    const double fro = a.frobenius_sq();
    if (!(fro > 0.0)) throw InvalidInput(name + ": A is zero");
    SolverSpec s;
    s.label = name;
    if (name == "RK") {
        s.family = Family::BRSI;
        s.row_sketch = SketchSpec::single_index(Axis::Row);
        s.alpha_r = p.alpha.value_or(1.0 / fro);
    } else if (name == "RCD") {
        s.family = Family::BCSI;
        s.col_sketch = SketchSpec::single_index(Axis::Column);
        s.alpha_c = p.alpha.value_or(1.0 / fro);
        s.alpha_r = s.alpha_c;
    } else if (name == "REK" || name == "REGS") {
        s.family = name == "REK" ? Family::EBRSI : Family::EBCRSI;
        s.row_sketch = SketchSpec::single_index(Axis::Row);
        s.col_sketch = SketchSpec::single_index(Axis::Column);
        s.alpha_r = p.alpha.value_or(1.0 / fro);
        s.alpha_c = p.alpha_c.value_or(s.alpha_r);
    } else if (name == "DSGS") {
        s.family = Family::DSBI;
        s.row_sketch = SketchSpec::entries();
        // No safe default: alpha = 1/||A||_F^2 is an exact Gauss-Seidel step and diverges on most matrices.
        s.alpha_r = require_alpha(p, name);
    } else if (name == "REABK") {
        s.family = Family::EBRSI;
        if (p.row_parts) {
            s.row_sketch = SketchSpec::partition(Axis::Row, *p.row_parts);
        } else {
            s.row_sketch = SketchSpec::contiguous_partition(Axis::Row, a.rows(), require_block(p, name));
        }
        if (p.col_parts) {
            s.col_sketch = SketchSpec::partition(Axis::Column, *p.col_parts);
        } else {
            s.col_sketch = SketchSpec::contiguous_partition(Axis::Column, a.cols(),
                                                            p.col_block.value_or(require_block(p, name)));
        }
        const double alpha = p.alpha.value_or(1.0);
        s.alpha_r = alpha / fro;
        s.alpha_c = p.alpha_c.value_or(alpha) / fro;
        if (p.block && !p.row_parts) s.label = with_block(name, *p.block);
    } else if (name == "BRUS") {
        const index_t l = require_block(p, name);
        s.family = Family::BRSI;
        s.row_sketch = SketchSpec::uniform_block(Axis::Row, l);
        s.alpha_r = require_alpha(p, name);
        s.absorb_scale = true;
        s.label = with_block(name, l);
    } else if (name == "BCUS") {
        const index_t l = require_block(p, name);
        s.family = Family::BCSI;
        s.col_sketch = SketchSpec::uniform_block(Axis::Column, l);
        s.alpha_c = require_alpha(p, name);
        s.alpha_r = s.alpha_c;
        s.absorb_scale = true;
        s.label = with_block(name, l);
    } else if (name == "EBRUS" || name == "EBCRUS") {
        const index_t l = require_block(p, name);
        s.family = name == "EBRUS" ? Family::EBRSI : Family::EBCRSI;
        s.row_sketch = SketchSpec::uniform_block(Axis::Row, l);
        s.col_sketch = SketchSpec::uniform_block(Axis::Column, p.col_block.value_or(l));
        s.alpha_r = require_alpha(p, name);
        s.alpha_c = p.alpha_c.value_or(s.alpha_r);
        s.absorb_scale = true;
        s.label = with_block(name, l);
    } else {
        throw InvalidInput("unknown named solver '" + name + "'");
    }
    s.validate();
    return s;
}

}  // namespace rbi
