#include "rbi/theory.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <sstream>

namespace rbi {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Exact: return "exact";
        case Provenance::Estimated: return "estimated";
        case Provenance::NotApplicable: return "n/a";
    }
    return "?";
}

namespace {

DenseMatrix block_of(const Matrix& a, Axis axis, std::span<const index_t> idx) {
    return axis == Axis::Row ? a.row_block_dense(idx) : a.col_block_dense(idx);
}

double selection_scale_sq(const SketchRealization& r, bool absorb) { return absorb ? 1.0 : r.scale_sq(); }

/// A^T S S^T v (row sketch), canonical scale.
Vector sketched_rows(const Matrix& a, const SketchRealization& s, std::span<const double> v) {
    if (s.is_dense()) {
        const Eigen::VectorXd y = s.dense.transpose() * as_eigen(v);
        return mat_vec_transpose(a, to_vector(s.dense * y));
    }
    Vector vi(s.indices.size());
    for (std::size_t k = 0; k < vi.size(); ++k) vi[k] = s.scale_sq() * v[static_cast<std::size_t>(s.indices[k])];
    return row_block_apply_transpose(a, s.indices, vi);
}

/// T T^T g, canonical scale.
Vector sketched_cols(const SketchRealization& t, std::span<const double> g) {
    if (t.is_dense()) {
        const Eigen::VectorXd y = t.dense.transpose() * as_eigen(g);
        return to_vector(t.dense * y);
    }
    Vector out(g.size(), 0.0);
    for (index_t j : t.indices) out[static_cast<std::size_t>(j)] = t.scale_sq() * g[static_cast<std::size_t>(j)];
    return out;
}

/// A^T S S^T A (n x n).
DenseMatrix sketched_gram(const Matrix& a, const SketchRealization& s) {
    if (s.is_dense()) {
        const DenseMatrix sa = s.dense.transpose() * a.to_dense();
        return sa.transpose() * sa;
    }
    const DenseMatrix ai = a.row_block_dense(s.indices);
    return s.scale_sq() * (ai.transpose() * ai);
}

/// A^T S S^T A T T^T T T^T A^T S S^T A for one outcome.
DenseMatrix beta_term(const Matrix& a, const CoupledRealization& c) {
    const DenseMatrix m = sketched_gram(a, c.row);
    const index_t n = a.cols();
    DenseMatrix d;
    if (c.col.is_dense()) {
        const DenseMatrix tt = c.col.dense * c.col.dense.transpose();
        d = tt * tt;
    } else {
        d = DenseMatrix::Zero(n, n);
        for (index_t j : c.col.indices) d(j, j) = c.col.scale_sq() * c.col.scale_sq();
    }
    return m * d * m;
}

bool pair_enumerable(const PairSketch& pair, std::size_t limit, std::vector<WeightedPair>& out) {
    try {
        out = pair.enumerate(limit);
        return true;
    } catch (const InvalidInput&) {
        return false;
    }
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

Estimate mc_estimate(std::size_t samples, const std::function<double()>& draw) {
    if (samples < 2) throw InvalidInput("Monte Carlo needs at least 2 samples");
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double x = draw();
        const double d = x - mean;
        mean += d / static_cast<double>(k + 1);
        m2 += d * (x - mean);
    }
    const double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples)), Provenance::Estimated};
}

}  // namespace

double lambda_max_exact(const Matrix& a, const SketchSpec& spec, bool absorb_scale, std::size_t limit) {
    if (std::holds_alternative<Gaussian>(spec.kind))
        throw InvalidInput("lambda_max is unbounded for Gaussian sketches");
    if (std::holds_alternative<SingleIndexNormSq>(spec.kind) && !absorb_scale) return a.frobenius_sq();
    const BoundSketch sketch(spec, a);
    if (!sketch.enumerable(limit))
        throw InvalidInput(spec.describe() + ": support too large for exact lambda_max; use lambda_hat");
    double best = 0.0;
    for (const auto& [p, r] : sketch.enumerate(limit)) {
        (void)p;
        const double v = selection_scale_sq(r, absorb_scale) * spectral_norm_sq(block_of(a, spec.axis, r.indices));
        best = std::max(best, v);
    }
    return best;
}

double lambda_hat(const Matrix& a, index_t ell, Axis axis, Rng& rng, std::optional<index_t> num_probe_sets) {
    const index_t dim = axis == Axis::Row ? a.rows() : a.cols();
    if (ell < 1 || ell > dim) throw InvalidInput("lambda_hat: block size must lie in [1, dim]");
    const index_t probes = num_probe_sets.value_or(ell);
    if (probes < 1) throw InvalidInput("lambda_hat: need at least one probe set");
    double best = 0.0;
    for (index_t t = 0; t < probes; ++t) {
        const IndexSet set = sample_subset(dim, ell, rng);
        const auto res = axis == Axis::Row ? row_block_spectral_norm_sq(a, set) : col_block_spectral_norm_sq(a, set);
        best = std::max(best, res.value);
    }
    return best;
}

Estimate gamma_exact(const Matrix& a, const SketchSpec& spec, std::span<const double> e, Rng* rng,
                     std::size_t mc_samples) {
    if (spec.axis != Axis::Row) throw InvalidInput("gamma uses a row sketch");
    if (e.size() != static_cast<std::size_t>(a.rows())) throw InvalidInput("gamma: residual length mismatch");
    const BoundSketch sketch(spec, a);
    if (sketch.enumerable()) {
        double acc = 0.0;
        for (const auto& [p, r] : sketch.enumerate()) acc += p * norm_sq(sketched_rows(a, r, e));
        return {acc, 0.0, Provenance::Exact};
    }
    Rng fallback(0);
    Rng& g = rng ? *rng : fallback;
    return mc_estimate(mc_samples, [&] { return norm_sq(sketched_rows(a, sketch.draw(g), e)); });
}

Estimate dsbi_gamma(const Matrix& a, const PairSketch& pair, std::span<const double> e, Rng* rng,
                    std::size_t mc_samples) {
    if (e.size() != static_cast<std::size_t>(a.rows())) throw InvalidInput("gamma: residual length mismatch");
    std::vector<WeightedPair> outcomes;
    auto value = [&](const CoupledRealization& c) { return norm_sq(sketched_cols(c.col, sketched_rows(a, c.row, e))); };
    if (pair_enumerable(pair, BoundSketch::kDefaultEnumerationLimit, outcomes)) {
        double acc = 0.0;
        for (const auto& [p, c] : outcomes) acc += p * value(c);
        return {acc, 0.0, Provenance::Exact};
    }
    Rng fallback(0);
    Rng& g = rng ? *rng : fallback;
    Rng col_rng(g.next());
    return mc_estimate(mc_samples, [&] { return value(pair.draw(g, col_rng)); });
}

Estimate dsbi_beta_exact(const Matrix& a, const PairSketch& pair, Rng* rng, std::size_t mc_samples) {
    const index_t n = a.cols();
    std::vector<WeightedPair> outcomes;
    if (pair_enumerable(pair, BoundSketch::kDefaultEnumerationLimit, outcomes)) {
        DenseMatrix acc = DenseMatrix::Zero(n, n);
        for (const auto& [p, c] : outcomes) acc += p * beta_term(a, c);
        return {symmetric_lambda_max(0.5 * (acc + acc.transpose())), 0.0, Provenance::Exact};
    }
    Rng fallback(0);
    return dsbi_beta_monte_carlo(a, pair, rng ? *rng : fallback, mc_samples);
}

Estimate dsbi_beta_monte_carlo(const Matrix& a, const PairSketch& pair, Rng& g, std::size_t mc_samples) {
    const index_t n = a.cols();
    // Norm of the overall mean; the standard error comes from the spread of batch norms.
    constexpr std::size_t batches = 20;
    const std::size_t per = std::max<std::size_t>(1, mc_samples / batches);
    Rng col_rng(g.next());
    DenseMatrix total = DenseMatrix::Zero(n, n);
    std::vector<double> norms;
    for (std::size_t bi = 0; bi < batches; ++bi) {
        DenseMatrix acc = DenseMatrix::Zero(n, n);
        for (std::size_t k = 0; k < per; ++k) acc += beta_term(a, pair.draw(g, col_rng));
        total += acc;
        acc /= static_cast<double>(per);
        norms.push_back(symmetric_lambda_max(0.5 * (acc + acc.transpose())));
    }
    total /= static_cast<double>(per * batches);
    const double mu = mean_of(norms);
    double var = 0.0;
    for (double x : norms) var += (x - mu) * (x - mu);
    var /= static_cast<double>(batches - 1);
    return {symmetric_lambda_max(0.5 * (total + total.transpose())), std::sqrt(var / batches), Provenance::Estimated};
}

double lemma1_delta(const SvdSummary& svd, double alpha, double beta) {
    double d = 0.0;
    for (double s : svd.singular_values) {
        const double s2 = s * s;
        d = std::max({d, std::abs(1.0 - alpha * s2), std::abs(1.0 - beta * s2)});
    }
    return d;
}

Lemma1Result lemma1_check(const SvdSummary& svd, double alpha, double beta, int k, Rng& rng, int num_vectors) {
    if (!(alpha > 0.0) || !(beta > 0.0) || k < 0) throw InvalidInput("lemma1_check: need alpha, beta > 0 and k >= 0");
    Lemma1Result out;
    out.delta = lemma1_delta(svd, alpha, beta);
    const DenseMatrix& v = svd.right_basis;
    Eigen::VectorXd s2(svd.rank);
    for (index_t i = 0; i < svd.rank; ++i) s2(i) = svd.singular_values[i] * svd.singular_values[i];
    const DenseMatrix gram = v * s2.asDiagonal() * v.transpose();
    const DenseMatrix proj = v * v.transpose();
    const double bound_factor = std::pow(out.delta, k);
    for (int t = 0; t < num_vectors; ++t) {
        Eigen::VectorXd c(svd.rank);
        for (index_t i = 0; i < svd.rank; ++i) c(i) = rng.normal();
        const Eigen::VectorXd u = v * c;
        const double un = u.norm();
        for (int i = 0; i <= k; ++i) {
            Eigen::VectorXd w = u;
            // Re-project after every factor so rounding cannot seed an undamped null-space component.
            for (int j = 0; j < k - i; ++j) w = proj * (w - alpha * (gram * w));
            for (int j = 0; j < i; ++j) w = proj * (w - beta * (gram * w));
            const double bound = bound_factor * un;
            const double ratio = bound > 0.0 ? w.norm() / bound : (w.norm() == 0.0 ? 0.0 : INFINITY);
            out.worst_ratio = std::max(out.worst_ratio, ratio);
            if (w.norm() > bound * (1.0 + 1e-12)) out.all_pass = false;
        }
    }
    return out;
}

double eta_rate(double alpha, double lambda, double sigma_min) {
    return 1.0 - alpha * (2.0 - alpha * lambda) * sigma_min * sigma_min;
}

double canonical_factor(const SketchSpec& spec, const Matrix& a, bool absorb_scale) {
    if (!absorb_scale) return 1.0;
    if (const auto* u = std::get_if<UniformBlock>(&spec.kind)) {
        const index_t dim = spec.axis == Axis::Row ? a.rows() : a.cols();
        return static_cast<double>(u->block) / static_cast<double>(dim);
    }
    throw InvalidInput("absorbed stepsizes are only defined for UniformBlock sketches (constant scale)");
}

namespace {

struct LambdaResult {
    double value = 0.0;
    Provenance provenance = Provenance::NotApplicable;
};

LambdaResult canonical_lambda(const Matrix& a, const SketchSpec& spec, const RateOptions& opts, Rng& rng,
                              std::vector<std::string>& warnings) {
    if (std::holds_alternative<Gaussian>(spec.kind)) {
        warnings.push_back(spec.describe() + ": lambda_max is unbounded; no rate guarantee");
        return {std::numeric_limits<double>::infinity(), Provenance::NotApplicable};
    }
    const BoundSketch sketch(spec, a);
    if (sketch.enumerable(opts.enumeration_limit))
        return {lambda_max_exact(a, spec, false, opts.enumeration_limit), Provenance::Exact};
    // Only UniformBlock supports outgrow the enumeration bound.
    const auto ell = std::get<UniformBlock>(spec.kind).block;
    const double hat = lambda_hat(a, ell, spec.axis, rng, opts.num_probe_sets);
    return {hat * static_cast<double>(sketch.dim()) / static_cast<double>(ell), Provenance::Estimated};
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RateReport::fields() const {
    std::vector<std::pair<std::string, std::string>> f{
        {"family", family_name(family)},
        {"alpha_r", fmt_double(alpha_r)},
        {"alpha_c", fmt_double(alpha_c)},
        {"lambda_max_r", fmt_double(lambda_max_r)},
        {"lambda_max_r_provenance", provenance_name(lambda_r_provenance)},
        {"lambda_max_c", fmt_double(lambda_max_c)},
        {"lambda_max_c_provenance", provenance_name(lambda_c_provenance)},
        {"sigma_min", fmt_double(sigma_min)},
        {"sigma_max", fmt_double(sigma_max)},
        {"eps", fmt_double(eps)},
        {"eta_r", fmt_double(eta_r)},
        {"eta_c", fmt_double(eta_c)},
        {"eta_eps", fmt_double(eta_eps)},
        {"delta", fmt_double(delta)},
        {"gamma", fmt_double(gamma)},
        {"gamma_stderr", fmt_double(gamma_stderr)},
        {"gamma_provenance", provenance_name(gamma_provenance)},
        {"horizon", fmt_double(horizon)},
        {"beta", fmt_double(beta)},
        {"beta_provenance", provenance_name(beta_provenance)},
        {"eta_dsbi", fmt_double(eta_dsbi)},
        {"convergent_r", convergent_r ? "1" : "0"},
        {"convergent_c", convergent_c ? "1" : "0"},
        {"consistent", consistent ? "1" : "0"},
    };
    for (const auto& w : warnings) f.emplace_back("warning", w);
    return f;
}

RateReport rate_report(const ProblemInstance& p, const SolverSpec& spec, const RateOptions& opts) {
    spec.validate();
    const SvdSummary& svd = p.require_svd();
    const Matrix& a = p.a;
    Rng rng = Rng::stream(opts.seed, 0, hash_label("rates"));

    RateReport r;
    r.family = spec.family;
    r.eps = opts.eps;
    r.sigma_min = svd.sigma_min();
    r.sigma_max = svd.sigma_max();
    r.consistent = p.consistent;
    const double s2 = r.sigma_min * r.sigma_min;

    // Least-squares residual A A^+ b - b; zero by definition on consistent systems.
    Vector e(static_cast<std::size_t>(a.rows()), 0.0);
    if (!p.consistent) {
        const Vector ax = mat_vec(a, p.x_ref);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ax[i] - p.b[i];
    }

    const bool uses_rows = spec.family == Family::BRSI || spec.family == Family::EBRSI || spec.family == Family::EBCRSI;
    const bool uses_cols = spec.family == Family::BCSI || spec.family == Family::EBRSI || spec.family == Family::EBCRSI;

    if (uses_rows) {
        r.alpha_r = spec.alpha_r * canonical_factor(*spec.row_sketch, a, spec.absorb_scale);
        const auto lam = canonical_lambda(a, *spec.row_sketch, opts, rng, r.warnings);
        r.lambda_max_r = lam.value;
        r.lambda_r_provenance = lam.provenance;
        r.convergent_r = r.alpha_r > 0.0 && r.alpha_r < 2.0 / r.lambda_max_r;
        r.eta_r = std::isfinite(r.lambda_max_r) ? eta_rate(r.alpha_r, r.lambda_max_r, r.sigma_min) : 1.0;
        if (!r.convergent_r) r.warnings.push_back("alpha_r outside (0, 2/lambda_max_r): no convergence guarantee");
    }
    if (uses_cols) {
        r.alpha_c = spec.alpha_c * canonical_factor(*spec.col_sketch, a, spec.absorb_scale);
        const auto lam = canonical_lambda(a, *spec.col_sketch, opts, rng, r.warnings);
        r.lambda_max_c = lam.value;
        r.lambda_c_provenance = lam.provenance;
        r.convergent_c = r.alpha_c > 0.0 && r.alpha_c < 2.0 / r.lambda_max_c;
        r.eta_c = std::isfinite(r.lambda_max_c) ? eta_rate(r.alpha_c, r.lambda_max_c, r.sigma_min) : 1.0;
        if (!r.convergent_c) r.warnings.push_back("alpha_c outside (0, 2/lambda_max_c): no convergence guarantee");
    }

    switch (spec.family) {
        case Family::BRSI: {
            r.delta = lemma1_delta(svd, r.alpha_r, r.alpha_r);
            r.eta_eps = 1.0 - r.alpha_r * (2.0 - r.alpha_r * (1.0 + r.eps) * r.lambda_max_r) * s2;
            if (p.consistent) {
                r.gamma = 0.0;
                r.gamma_provenance = Provenance::Exact;
            } else {
                const auto g = gamma_exact(a, *spec.row_sketch, e, &rng, opts.mc_samples);
                r.gamma = g.value;
                r.gamma_stderr = g.std_error;
                r.gamma_provenance = g.provenance;
            }
            const double denom = (2.0 - r.alpha_r * (1.0 + r.eps) * r.lambda_max_r) * s2;
            r.horizon = denom > 0.0 ? r.alpha_r * (1.0 + 1.0 / r.eps) * r.gamma / denom
                                    : std::numeric_limits<double>::infinity();
            break;
        }
        case Family::BCSI:
            r.delta = lemma1_delta(svd, r.alpha_c, r.alpha_c);
            if (p.rank < a.cols())
                r.warnings.push_back("rank-deficient A: BCSI converges in A(x - A^+ b) only");
            break;
        case Family::EBRSI:
        case Family::EBCRSI:
            r.delta = lemma1_delta(svd, r.alpha_r, r.alpha_c);
            r.eta_eps = (1.0 + r.eps) * r.eta_r;
            break;
        case Family::DSBI: {
            if (spec.absorb_scale) r.warnings.push_back("absorb_scale ignored for DSBI rate constants");
            r.alpha_r = spec.alpha_r;
            const PairSketch pair = std::holds_alternative<EntryNormSq>(spec.row_sketch->kind)
                                        ? PairSketch::coupled_entries(a)
                                        : PairSketch::independent(BoundSketch(*spec.row_sketch, a),
                                                                  BoundSketch(*spec.col_sketch, a));
            const auto b = dsbi_beta_exact(a, pair, &rng, opts.mc_samples);
            r.beta = b.value;
            r.beta_provenance = b.provenance;
            if (p.consistent) {
                r.gamma = 0.0;
                r.gamma_provenance = Provenance::Exact;
            } else {
                const auto g = dsbi_gamma(a, pair, e, &rng, opts.mc_samples);
                r.gamma = g.value;
                r.gamma_stderr = g.std_error;
                r.gamma_provenance = g.provenance;
            }
            r.delta = lemma1_delta(svd, r.alpha_r, r.alpha_r);
            r.eta_dsbi = 1.0 - 2.0 * r.alpha_r * s2 + (1.0 + r.eps) * r.alpha_r * r.alpha_r * r.beta;
            const double denom = 2.0 * s2 - (1.0 + r.eps) * r.alpha_r * r.beta;
            r.horizon = denom > 0.0 ? r.alpha_r * (1.0 + 1.0 / r.eps) * r.gamma / denom
                                    : std::numeric_limits<double>::infinity();
            r.convergent_r = denom > 0.0 && p.rank == a.cols();
            if (p.rank < a.cols()) r.warnings.push_back("the mean-square bound for DSBI needs full column rank");
            break;
        }
    }
    return r;
}

std::vector<double> extended_sum(double eta_c, double q, std::size_t k_max) {
    std::vector<double> t(k_max + 1, 0.0);
    double qk = 1.0;  // q^(k-1)
    for (std::size_t k = 1; k <= k_max; ++k) {
        t[k] = eta_c * t[k - 1] + eta_c * qk;
        qk *= q;
    }
    return t;
}

BoundCurve bound_curve(const RateReport& r, BoundKind kind, double x0_err, std::size_t k_max, double z0_err) {
    BoundCurve out;
    out.values.resize(k_max + 1);
    auto geometric = [&](double eta, double start, double limit) {
        double pk = 1.0;
        for (std::size_t k = 0; k <= k_max; ++k) {
            out.values[k] = pk * start + limit * (1.0 - pk);
            pk *= eta;
        }
        out.divergent = !(eta < 1.0);
    };
    switch (kind) {
        case BoundKind::RowConsistent: geometric(r.eta_r, x0_err, 0.0); break;
        case BoundKind::RowInconsistent: geometric(r.eta_eps, x0_err, r.horizon); break;
        case BoundKind::Column: geometric(r.eta_c, x0_err, 0.0); break;
        case BoundKind::Doubly: geometric(r.eta_dsbi, x0_err, r.horizon); break;
        case BoundKind::Extended: {
            const double q = (1.0 + r.eps) * r.eta_r;
            const auto t = extended_sum(r.eta_c, q, k_max);
            const double coeff = (1.0 + 1.0 / r.eps) * r.alpha_r * r.alpha_r * r.lambda_max_r * z0_err;
            double qk = 1.0;
            for (std::size_t k = 0; k <= k_max; ++k) {
                out.values[k] = qk * x0_err + coeff * t[k];
                qk *= q;
            }
            out.divergent = !(q < 1.0) || !(r.eta_c < 1.0);
            break;
        }
    }
    return out;
}

namespace {

Eigen::VectorXd apply_power(const DenseMatrix& m, Eigen::VectorXd v, int k) {
    for (int i = 0; i < k; ++i) v = m * v;
    return v;
}

Vector extended_expectation(const DenseMatrix& a, double alpha_r, double alpha_c, std::span<const double> e0,
                            const Eigen::VectorXd& forcing, double sign, int k) {
    const index_t n = a.cols();
    const DenseMatrix ata = a.transpose() * a;
    const DenseMatrix pr = DenseMatrix::Identity(n, n) - alpha_r * ata;
    const DenseMatrix pc = DenseMatrix::Identity(n, n) - alpha_c * ata;
    Eigen::VectorXd e = apply_power(pr, as_eigen(e0), k);
    for (int i = 0; i < k; ++i) e += sign * alpha_r * apply_power(pr, apply_power(pc, forcing, k - i), i);
    return to_vector(e);
}

}  // namespace

Vector expected_error_dsbi(const DenseMatrix& a, double alpha, std::span<const double> e0, int k) {
    const index_t n = a.cols();
    const DenseMatrix p = DenseMatrix::Identity(n, n) - alpha * (a.transpose() * a);
    return to_vector(apply_power(p, as_eigen(e0), k));
}

Vector expected_error_ebrsi(const DenseMatrix& a, double alpha_r, double alpha_c, std::span<const double> e0,
                            std::span<const double> z0, int k) {
    const Eigen::VectorXd f = a.transpose() * as_eigen(z0);
    return extended_expectation(a, alpha_r, alpha_c, e0, f, -1.0, k);
}

Vector expected_error_ebcrsi(const DenseMatrix& a, std::span<const double> b, double alpha_r, double alpha_c,
                             std::span<const double> e0, std::span<const double> z0, int k) {
    const Eigen::VectorXd f = a.transpose() * (a * as_eigen(z0) - as_eigen(b));
    return extended_expectation(a, alpha_r, alpha_c, e0, f, 1.0, k);
}

}  // namespace rbi
