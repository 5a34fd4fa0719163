#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "rbi/linalg.hpp"
#include "rbi/problems.hpp"
#include "rbi/solvers.hpp"
#include "test_util.hpp"

using namespace rbi;
using namespace testutil;

namespace {

SketchRealization full(index_t dim) {
    SketchRealization r;
    for (index_t i = 0; i < dim; ++i) r.indices.push_back(i);
    return r;
}

SketchRealization pick(IndexSet idx, double scale) {
    SketchRealization r;
    r.indices = std::move(idx);
    r.scale = scale;
    return r;
}

SolverState state(Vector x, Vector z = {}, Vector r = {}) {
    SolverState s;
    s.x = std::move(x);
    s.z = std::move(z);
    s.r = std::move(r);
    return s;
}

Eigen::VectorXd ev(const Vector& v) { return as_eigen(v); }

/// E[x^1] (and E[z^1]) by enumerating every realization of a bound solver.
std::pair<Vector, Vector> enumerate_one_step(const Solver& solver, const Matrix& a, const Vector& b,
                                             const SolverState& s0) {
    const auto& spec = solver.spec();
    Eigen::VectorXd ex = Eigen::VectorXd::Zero(static_cast<index_t>(s0.x.size()));
    Eigen::VectorXd ez = Eigen::VectorXd::Zero(static_cast<index_t>(s0.z.size()));
    auto add = [&](double p, const SolverState& s) {
        ex += p * ev(s.x);
        if (!s.z.empty()) ez += p * ev(s.z);
    };
    switch (spec.family) {
        case Family::BRSI:
            for (const auto& o : solver.row_sketch()->enumerate()) {
                auto s = s0;
                brsi_step(s, a, b, o.realization, spec.alpha_r, spec.absorb_scale);
                add(o.probability, s);
            }
            break;
        case Family::BCSI:
            for (const auto& o : solver.col_sketch()->enumerate()) {
                auto s = s0;
                bcsi_step(s, a, o.realization, spec.alpha_c, spec.absorb_scale);
                add(o.probability, s);
            }
            break;
        case Family::EBRSI:
        case Family::EBCRSI:
            for (const auto& orow : solver.row_sketch()->enumerate())
                for (const auto& ocol : solver.col_sketch()->enumerate()) {
                    auto s = s0;
                    if (spec.family == Family::EBRSI)
                        ebrsi_step(s, a, b, orow.realization, ocol.realization, spec.alpha_r, spec.alpha_c,
                                   spec.absorb_scale);
                    else
                        ebcrsi_step(s, a, orow.realization, ocol.realization, spec.alpha_r, spec.alpha_c,
                                    spec.absorb_scale);
                    add(orow.probability * ocol.probability, s);
                }
            break;
        case Family::DSBI:
            for (const auto& o : solver.pair_sketch()->enumerate()) {
                auto s = s0;
                dsbi_step(s, a, b, o.realization, spec.alpha_r, spec.absorb_scale);
                add(o.probability, s);
            }
            break;
    }
    return {to_vec(ex), to_vec(ez)};
}

SolverSpec make(Family f, std::optional<SketchSpec> row, std::optional<SketchSpec> col, double ar, double ac) {
    SolverSpec s;
    s.family = f;
    s.row_sketch = std::move(row);
    s.col_sketch = std::move(col);
    s.alpha_r = ar;
    s.alpha_c = ac;
    s.label = family_name(f);
    return s;
}

}  // namespace

TEST_CASE("brsi_step examples") {
    const auto a = Matrix::identity(2);
    const Vector b{1, 1};
    auto s = state({0, 0});
    brsi_step(s, a, b, full(2), 1.0);
    CHECK(s.x == Vector{1, 1});

    // I = {1} with selection scale^2 = 2 applied in the step and alpha_r = 1/2.
    auto t = state({0, 0});
    brsi_step(t, a, b, pick({0}, std::sqrt(2.0)), 0.5);
    CHECK(max_abs_diff(t.x, Vector{1, 0}) <= 1e-15);

    // Absorbed form: the same projection needs alpha_r = 1.
    auto u = state({0, 0});
    brsi_step(u, a, b, pick({0}, std::sqrt(2.0)), 1.0, true);
    CHECK(max_abs_diff(u.x, Vector{1, 0}) <= 1e-15);
}

TEST_CASE("bcsi_step examples") {
    const auto a = Matrix::identity(2);
    auto s = state({0, 0}, {}, {1, 1});
    bcsi_step(s, a, full(2), 1.0);
    CHECK(s.x == Vector{1, 1});
    CHECK(s.r == Vector{0, 0});

    const auto d = Matrix::dense(2, 2, {1, 0, 0, 2});
    auto t = state({0, 0}, {}, {1, 4});
    bcsi_step(t, d, pick({1}, std::sqrt(2.0)), 1.0 / 8.0, true);
    CHECK(max_abs_diff(t.x, Vector{0, 1}) <= 1e-15);
    CHECK(max_abs_diff(t.r, Vector{1, 2}) <= 1e-15);
}

TEST_CASE("bcsi residual stays in sync") {
    Rng rng(1);
    const auto a = random_dense(50, 20, rng);
    const auto b = random_vector(50, rng);
    Solver solver(a, b, named_spec("BCUS", a, {.block = 4, .alpha = 0.01}));
    auto s = solver.initial_state();
    Rng r1(2), r2(3);
    for (int k = 0; k < 1000; ++k) solver.step(s, r1, r2);
    CHECK(residual_drift(s, a, b, Family::BCSI) <= 1e-10);
}

TEST_CASE("ebrsi_step examples") {
    const auto a = Matrix::identity(2);
    const Vector b{1, 1};
    auto s = state({0, 0}, b);
    ebrsi_step(s, a, b, full(2), full(2), 1.0, 1.0);
    CHECK(s.z == Vector{0, 0});
    CHECK(s.x == Vector{1, 1});
}

TEST_CASE("ebrsi z tends to zero on a consistent system") {
    Rng rng(4);
    const auto p = make_synthetic({.m = 12, .n = 6, .r = 6, .kappa = 3, .consistent = true, .seed = 5});
    const auto spec = named_spec("REK", p.a);
    Solver solver(p.a, p.b, spec);
    auto s = solver.initial_state();
    Rng r1(6), r2(7);
    for (int k = 0; k < 3000; ++k) solver.step(s, r1, r2);
    CHECK(norm(s.z) <= 1e-8 * norm(p.b));
}

TEST_CASE("ebcrsi_step examples") {
    const auto a = Matrix::identity(2);
    const Vector b{1, 1};
    auto s = state({0, 0}, {0, 0}, b);
    ebcrsi_step(s, a, full(2), full(2), 1.0, 1.0);
    CHECK(s.z == Vector{1, 1});
    CHECK(s.x == Vector{1, 1});

    // x0 = z0 with exact solves: x tracks z.
    const auto i3 = Matrix::identity(3);
    const Vector b3{1, -2, 3};
    auto t = state({0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, axpy(-1.0, Vector{0.5, 0.5, 0.5}, b3));
    for (int k = 0; k < 3; ++k) {
        ebcrsi_step(t, i3, full(3), full(3), 1.0, 1.0);
        CHECK(max_abs_diff(t.x, t.z) <= 1e-15);
    }
}

TEST_CASE("dsbi_step examples") {
    const auto a = Matrix::dense(1, 1, {2});
    const Vector b{4};
    const auto pair = PairSketch::coupled_entries(a);
    Rng r1(1), r2(2);
    auto s = state({0});
    dsbi_step(s, a, b, pair.draw(r1, r2), 1.0 / a.frobenius_sq());
    CHECK(s.x == Vector{2});

    const auto id = Matrix::identity(2);
    auto t = state({0, 0});
    dsbi_step(t, id, Vector{1, 1}, CoupledRealization{full(2), full(2)}, 1.0);
    CHECK(t.x == Vector{1, 1});
}

TEST_CASE("one-step expectation for every family") {
    Rng rng(8);
    const auto a = random_low_rank(6, 4, 3, rng);
    const auto b = random_vector(6, rng);
    const DenseMatrix ad = a.to_dense();
    const Vector x0 = random_vector(4, rng);
    const Eigen::VectorXd grad = ad.transpose() * (ad * ev(x0) - ev(b));

    SUBCASE("BRSI uniform block, scale applied") {
        const Solver s(a, b, make(Family::BRSI, SketchSpec::uniform_block(Axis::Row, 2), {}, 0.05, 0));
        const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0));
        CHECK(max_abs_diff(ex, to_vec(ev(x0) - 0.05 * grad)) <= 1e-12);
    }
    SUBCASE("BRSI uniform block, scale absorbed") {
        auto spec = make(Family::BRSI, SketchSpec::uniform_block(Axis::Row, 2), {}, 0.05, 0);
        spec.absorb_scale = true;
        const Solver s(a, b, spec);
        const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0));
        CHECK(max_abs_diff(ex, to_vec(ev(x0) - 0.05 * (2.0 / 6.0) * grad)) <= 1e-12);
    }
    SUBCASE("BRSI single index and partition") {
        for (const auto& row : {SketchSpec::single_index(Axis::Row), SketchSpec::contiguous_partition(Axis::Row, 6, 4)}) {
            const Solver s(a, b, make(Family::BRSI, row, {}, 0.03, 0));
            const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0));
            CHECK(max_abs_diff(ex, to_vec(ev(x0) - 0.03 * grad)) <= 1e-12);
        }
    }
    SUBCASE("BCSI") {
        const Solver s(a, b, make(Family::BCSI, {}, SketchSpec::uniform_block(Axis::Column, 3), 0, 0.04));
        const auto r0 = axpy(-1.0, mat_vec(a, x0), b);
        const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0, {}, r0));
        CHECK(max_abs_diff(ex, to_vec(ev(x0) - 0.04 * grad)) <= 1e-12);
    }
    SUBCASE("EBRSI") {
        const Solver s(a, b,
                       make(Family::EBRSI, SketchSpec::uniform_block(Axis::Row, 2),
                            SketchSpec::single_index(Axis::Column), 0.05, 0.07));
        const Vector z0 = random_vector(6, rng);
        const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0, z0));
        const Eigen::VectorXd z1 = ev(z0) - 0.07 * ad * (ad.transpose() * ev(z0));
        CHECK(max_abs_diff(ez, to_vec(z1)) <= 1e-12);
        const Eigen::VectorXd x1 = ev(x0) - 0.05 * ad.transpose() * (ad * ev(x0) - ev(b) + z1);
        CHECK(max_abs_diff(ex, to_vec(x1)) <= 1e-12);
    }
    SUBCASE("EBCRSI") {
        const Solver s(a, b,
                       make(Family::EBCRSI, SketchSpec::contiguous_partition(Axis::Row, 6, 2),
                            SketchSpec::uniform_block(Axis::Column, 2), 0.05, 0.07));
        const Vector z0 = random_vector(4, rng);
        const auto r0 = axpy(-1.0, mat_vec(a, z0), b);
        const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0, z0, r0));
        const Eigen::VectorXd z1 = ev(z0) + 0.07 * ad.transpose() * (ev(b) - ad * ev(z0));
        CHECK(max_abs_diff(ez, to_vec(z1)) <= 1e-12);
        const Eigen::VectorXd x1 = ev(x0) - 0.05 * ad.transpose() * (ad * (ev(x0) - z1));
        CHECK(max_abs_diff(ex, to_vec(x1)) <= 1e-12);
    }
    SUBCASE("DSBI coupled entries") {
        const auto a43 = random_dense(4, 3, rng);
        const auto b4 = random_vector(4, rng);
        const Vector y0 = random_vector(3, rng);
        const Solver s(a43, b4, named_spec("DSGS", a43, {.alpha = 0.02}));
        const auto [ex, ez] = enumerate_one_step(s, a43, b4, state(y0));
        const DenseMatrix d = a43.to_dense();
        const Eigen::VectorXd x1 = ev(y0) - 0.02 * d.transpose() * (d * ev(y0) - ev(b4));
        CHECK(max_abs_diff(ex, to_vec(x1)) <= 1e-12);
    }
    SUBCASE("DSBI independent sketches") {
        const Solver s(a, b,
                       make(Family::DSBI, SketchSpec::single_index(Axis::Row), SketchSpec::uniform_block(Axis::Column, 2),
                            0.01, 0));
        const auto [ex, ez] = enumerate_one_step(s, a, b, state(x0));
        CHECK(max_abs_diff(ex, to_vec(ev(x0) - 0.01 * grad)) <= 1e-12);
    }
}

TEST_CASE("range invariant for BRSI from x0 = 0") {
    Rng rng(9);
    const auto a = random_low_rank(15, 8, 4, rng);
    const auto b = random_vector(15, rng);
    const auto svd = svd_summary(a);
    Solver solver(a, b, named_spec("BRUS", a, {.block = 3, .alpha = 0.5 / spectral_norm_sq(a.to_dense())}));
    auto s = solver.initial_state();
    Rng r1(10), r2(11);
    for (int k = 0; k < 500; ++k) {
        solver.step(s, r1, r2);
        if (k % 25 == 0) CHECK(norm(project_nullspace(svd, s.x)) <= 1e-9 * norm(s.x));
    }
}

TEST_CASE("mean squared error stays under the consistent bound") {
    const auto p = make_synthetic({.m = 30, .n = 10, .r = 10, .kappa = 3, .consistent = true, .seed = 12});
    const auto spec = named_spec("RK", p.a);
    const Solver solver(p.a, p.b, spec);
    const double eta = 1.0 - p.sigma_min() * p.sigma_min() / p.a.frobenius_sq();
    const int trials = 200, k_max = 50;
    std::vector<double> mse(k_max + 1, 0.0);
    for (int t = 0; t < trials; ++t) {
        auto streams = trial_streams(1, t, spec.label);
        auto s = solver.initial_state();
        mse[0] += dist_sq(s.x, p.x_ref);
        for (int k = 1; k <= k_max; ++k) {
            solver.step(s, streams.row, streams.col);
            mse[k] += dist_sq(s.x, p.x_ref);
        }
    }
    const double e0 = mse[0] / trials;
    for (int k = 0; k <= k_max; ++k) CHECK(mse[k] / trials <= 1.2 * std::pow(eta, k) * e0);
}

TEST_CASE("BCSI image-space error stays under its bound") {
    const auto p = make_synthetic({.m = 20, .n = 12, .r = 12, .kappa = 3, .consistent = false, .seed = 13});
    const auto spec = named_spec("RCD", p.a);
    const Solver solver(p.a, p.b, spec);
    const double eta = 1.0 - p.sigma_min() * p.sigma_min() / p.a.frobenius_sq();
    const int trials = 200, k_max = 60;
    const auto ax_ref = mat_vec(p.a, p.x_ref);
    std::vector<double> err(k_max + 1, 0.0);
    for (int t = 0; t < trials; ++t) {
        auto streams = trial_streams(2, t, spec.label);
        auto s = solver.initial_state();
        err[0] += dist_sq(mat_vec(p.a, s.x), ax_ref);
        for (int k = 1; k <= k_max; ++k) {
            solver.step(s, streams.row, streams.col);
            err[k] += dist_sq(mat_vec(p.a, s.x), ax_ref);
        }
    }
    for (int k = 0; k <= k_max; ++k) CHECK(err[k] <= 1.2 * std::pow(eta, k) * err[0]);
}

TEST_CASE("EBRSI z approaches the least-squares residual") {
    const auto p = make_synthetic({.m = 16, .n = 10, .r = 6, .kappa = 3, .consistent = false, .seed = 14});
    const auto spec = named_spec("REK", p.a);
    const Solver solver(p.a, p.b, spec);
    const auto target = project_left_nullspace(p.require_svd(), p.b);
    const double eta_c = 1.0 - p.sigma_min() * p.sigma_min() / p.a.frobenius_sq();
    const int trials = 200, k_max = 60;
    std::vector<double> err(k_max + 1, 0.0);
    for (int t = 0; t < trials; ++t) {
        auto streams = trial_streams(3, t, spec.label);
        auto s = solver.initial_state();
        err[0] += dist_sq(s.z, target);
        for (int k = 1; k <= k_max; ++k) {
            solver.step(s, streams.row, streams.col);
            err[k] += dist_sq(s.z, target);
        }
    }
    for (int k = 0; k <= k_max; ++k) CHECK(err[k] <= 1.2 * std::pow(eta_c, k) * err[0]);
}

TEST_CASE("run loop") {
    SUBCASE("RK on the identity") {
        ProblemInstance p;
        p.a = Matrix::identity(2);
        p.b = {1, 1};
        finalize(p, svd_summary(p.a));
        const auto rec = run(p, named_spec("RK", p.a), {}, 1, 0);
        CHECK(rec.converged);
        CHECK(rec.final_relerr == 0.0);
        CHECK(rec.epochs <= 2);
        CHECK(rec.iters == rec.epochs * 2);
        CHECK(rec.relerr_trace.front() == 1.0);
        CHECK(rec.relerr_trace.size() == rec.epochs + 1);
    }
    SUBCASE("max_epochs = 0") {
        const auto p = make_synthetic({.m = 10, .n = 4, .r = 4, .kappa = 2, .consistent = true, .seed = 1});
        const auto rec = run(p, named_spec("RK", p.a), {.relerr_tol = 1e-10, .max_epochs = 0}, 1, 0);
        CHECK(rec.epochs == 0);
        CHECK(rec.iters == 0);
        CHECK(rec.final_relerr == 1.0);
        CHECK_FALSE(rec.converged);
    }
    SUBCASE("zero reference switches to absolute error") {
        ProblemInstance p;
        p.a = Matrix::identity(2);
        p.b = {0, 0};
        finalize(p, svd_summary(p.a));
        const auto rec = run(p, named_spec("RK", p.a), {.relerr_tol = 1e-10, .max_epochs = 3}, 1, 0);
        CHECK(rec.absolute_error);
        CHECK(rec.final_relerr == 0.0);
    }
    SUBCASE("residual drift is recorded for BCSI") {
        const auto p = make_synthetic({.m = 30, .n = 10, .r = 10, .kappa = 3, .consistent = false, .seed = 2});
        const auto rec = run(p, named_spec("RCD", p.a), {.relerr_tol = 1e-10, .max_epochs = 200}, 1, 0);
        CHECK(rec.converged);
        CHECK(rec.max_residual_drift <= 1e-10 * norm(p.b));
    }
    SUBCASE("same seed, same record") {
        const auto p = make_synthetic({.m = 40, .n = 10, .r = 10, .kappa = 4, .consistent = true, .seed = 3});
        const auto spec = named_spec("BRUS", p.a, {.block = 5, .alpha = 0.5});
        const auto r1 = run(p, spec, {.relerr_tol = 1e-8, .max_epochs = 50}, 9, 4);
        const auto r2 = run(p, spec, {.relerr_tol = 1e-8, .max_epochs = 50}, 9, 4);
        CHECK(r1.relerr_trace == r2.relerr_trace);
        CHECK(r1.epochs == r2.epochs);
        CHECK(r1.touched == r2.touched);
        const auto r3 = run(p, spec, {.relerr_tol = 1e-8, .max_epochs = 50}, 9, 5);
        CHECK(r1.relerr_trace != r3.relerr_trace);
    }
}

TEST_CASE("epoch lengths") {
    Rng rng(15);
    const auto a = random_dense(12, 5, rng);
    const Vector b(12, 1.0);
    CHECK(Solver(a, b, named_spec("RK", a)).epoch_length() == 12);
    CHECK(Solver(a, b, named_spec("RCD", a)).epoch_length() == 5);
    CHECK(Solver(a, b, named_spec("REK", a)).epoch_length() == 12);
    CHECK(Solver(a, b, named_spec("DSGS", a, {.alpha = 1e-3})).epoch_length() == 12);
    CHECK(Solver(a, b, named_spec("BRUS", a, {.block = 5, .alpha = 1})).epoch_length() == 3);
    CHECK(Solver(a, b, named_spec("BCUS", a, {.block = 2, .alpha = 1})).epoch_length() == 3);
    CHECK(Solver(a, b, named_spec("EBRUS", a, {.block = 4, .alpha = 1})).epoch_length() == 3);
}

TEST_CASE("named specs") {
    Rng rng(16);
    const auto a = random_dense(6, 4, rng);
    const double f2 = a.frobenius_sq();

    const auto rk = named_spec("RK", a);
    CHECK(rk.family == Family::BRSI);
    CHECK(std::holds_alternative<SingleIndexNormSq>(rk.row_sketch->kind));
    CHECK(rk.alpha_r == doctest::Approx(1.0 / f2));

    const auto rcd = named_spec("RCD", a);
    CHECK(rcd.family == Family::BCSI);
    CHECK(rcd.alpha_c == doctest::Approx(1.0 / f2));

    const auto rek = named_spec("REK", a);
    CHECK(rek.family == Family::EBRSI);
    CHECK(rek.alpha_r == doctest::Approx(1.0 / f2));
    CHECK(rek.alpha_c == doctest::Approx(1.0 / f2));

    CHECK(named_spec("REGS", a).family == Family::EBCRSI);
    CHECK(named_spec("DSGS", a, {.alpha = 1e-3}).family == Family::DSBI);
    CHECK_THROWS_AS(named_spec("DSGS", a), InvalidInput);

    const auto brus = named_spec("BRUS", a, {.block = 2, .alpha = 0.3});
    CHECK(brus.absorb_scale);
    CHECK(brus.label == "BRUS(2)");
    CHECK_THROWS_AS(named_spec("BRUS", a, {.block = 2}), InvalidInput);
    CHECK_THROWS_AS(named_spec("BRUS", a, {.alpha = 1}), InvalidInput);
    CHECK_THROWS_AS(named_spec("NOPE", a), InvalidInput);

    const auto reabk = named_spec("REABK", a, {.block = 2, .alpha = 1.5});
    CHECK(reabk.alpha_r == doctest::Approx(1.5 / f2));
    CHECK(reabk.alpha_c == doctest::Approx(1.5 / f2));
}

TEST_CASE("BRUS with l = m is the Landweber step") {
    Rng rng(17);
    const auto a = random_dense(6, 4, rng);
    const auto b = random_vector(6, rng);
    const Solver solver(a, b, named_spec("BRUS", a, {.block = 6, .alpha = 0.05}));
    auto s = solver.initial_state(random_vector(4, rng));
    const auto x0 = s.x;
    Rng r1(1), r2(2);
    solver.step(s, r1, r2);
    const DenseMatrix d = a.to_dense();
    CHECK(max_abs_diff(s.x, to_vec(ev(x0) - 0.05 * d.transpose() * (d * ev(x0) - ev(b)))) <= 1e-13);
}

TEST_CASE("REABK with trivial partitions is deterministic") {
    Rng rng(18);
    const auto a = random_dense(6, 4, rng);
    const auto b = random_vector(6, rng);
    const NamedParams np{.alpha = 1.0, .row_parts = std::vector<IndexSet>{{0, 1, 2, 3, 4, 5}},
                         .col_parts = std::vector<IndexSet>{{0, 1, 2, 3}}};
    const Solver solver(a, b, named_spec("REABK", a, np));
    auto s1 = solver.initial_state();
    auto s2 = solver.initial_state();
    Rng a1(1), a2(2), b1(3), b2(4);
    for (int k = 0; k < 5; ++k) {
        solver.step(s1, a1, a2);
        solver.step(s2, b1, b2);
    }
    CHECK(s1.x == s2.x);
    CHECK(s1.z == s2.z);
}

TEST_CASE("gaussian sketches reduce the error") {
    const auto p = make_synthetic({.m = 20, .n = 5, .r = 5, .kappa = 2, .consistent = true, .seed = 19});
    SolverSpec spec = make(Family::BRSI, SketchSpec::gaussian(Axis::Row, 10), {}, 0.1 / (p.sigma_max() * p.sigma_max()), 0);
    const auto rec = run(p, spec, {.relerr_tol = 1e-6, .max_epochs = 500}, 1, 0);
    CHECK(rec.final_relerr < 1e-6);
}

TEST_CASE("invalid specs are rejected") {
    Rng rng(20);
    const auto a = random_dense(5, 3, rng);
    const Vector b(5, 1.0);
    CHECK_THROWS_AS(Solver(a, b, make(Family::BRSI, {}, {}, 1, 1)), InvalidInput);
    CHECK_THROWS_AS(Solver(a, b, make(Family::BRSI, SketchSpec::single_index(Axis::Row), {}, -1, 1)), InvalidInput);
    CHECK_THROWS_AS(Solver(a, b, make(Family::BCSI, SketchSpec::single_index(Axis::Row), {}, 1, 1)), InvalidInput);
    CHECK_THROWS_AS(Solver(a, Vector(4, 1.0), make(Family::BRSI, SketchSpec::single_index(Axis::Row), {}, 1, 1)),
                    InvalidInput);
    CHECK(parse_family("EBCRSI") == Family::EBCRSI);
    CHECK_THROWS_AS(parse_family("XYZ"), InvalidInput);
}
