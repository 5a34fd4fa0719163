#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbi/experiment.hpp"
#include "test_util.hpp"

using namespace rbi;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("rbi_test_experiment_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Drop the mean_time_s column (and any line carrying wall time) so outputs can be compared byte for byte.
std::string mask_time(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    int time_col = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            out << line << '\n';
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (time_col < 0) {
            for (std::size_t k = 0; k < cells.size(); ++k)
                if (cells[k] == "mean_time_s") time_col = static_cast<int>(k);
        } else if (time_col < static_cast<int>(cells.size())) {
            cells[static_cast<std::size_t>(time_col)] = "*";
        }
        for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
        out << '\n';
    }
    return out.str();
}

/// Every file under `dir`, masked, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = mask_time(slurp(e.path()));
    return out;
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.problem.m = 60;
    c.problem.n = 20;
    c.problem.r = 20;
    c.problem.kappa = 4;
    c.solvers = {"RK", "BRUS(5)", "RCD", "EBRUS(4)", "REGS"};
    c.trials = 3;
    c.max_epochs = 400;
    c.master_seed = 7;
    c.output_dir = out;
    return c;
}

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" RBI_BENCH "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("solver tokens") {
    const auto a = Matrix::identity(6);
    auto t = parse_solver_token("BRUS(20)", a);
    CHECK(t.name == "BRUS");
    CHECK(t.block == 20);
    CHECK_FALSE(t.explicit_family);

    t = parse_solver_token("RK", a);
    CHECK(t.name == "RK");
    CHECK_FALSE(t.block);

    t = parse_solver_token("EBRSI:row=uniform(3)/col=gaussian(2)+absorb", a);
    CHECK(t.explicit_family);
    CHECK(t.name == "EBRSI");
    CHECK(t.absorb);
    REQUIRE(t.row);
    CHECK(std::get<UniformBlock>(t.row->kind).block == 3);
    REQUIRE(t.col);
    CHECK(std::get<Gaussian>(t.col->kind).width == 2);

    t = parse_solver_token("DSBI:row=entries", a);
    CHECK(std::holds_alternative<EntryNormSq>(t.row->kind));
    t = parse_solver_token("BRSI:row=partition(2)", a);
    CHECK(std::get<PartitionNormSq>(t.row->kind).parts.size() == 3);

    CHECK_THROWS_AS(parse_solver_token("FOO", a), InvalidInput);
    CHECK_THROWS_AS(parse_solver_token("BRSI:row=bogus(3)", a), InvalidInput);
    CHECK_THROWS_AS(parse_solver_token("BRSI:left=single", a), InvalidInput);
}

TEST_CASE("split_list and number formatting") {
    CHECK(split_list("RK  BRUS(20);REK\n") == std::vector<std::string>{"RK", "BRUS(20)", "REK"});
    CHECK(split_list("").empty());
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(std::isinf(parse_double(format_double(std::numeric_limits<double>::infinity()))));
    CHECK_THROWS(parse_double("1.5x"));
}

TEST_CASE("summaries are exact arithmetic means") {
    std::vector<TrialResult> trials(3);
    const double relerr[3] = {1e-11, 3e-11, 8e-11};
    for (std::size_t k = 0; k < 3; ++k) {
        trials[k].record.epochs = 10 + k;
        trials[k].record.iters = 100 * (10 + k);
        trials[k].record.final_relerr = relerr[k];
        trials[k].record.wall_time_s = 0.25 * static_cast<double>(k);
        trials[k].record.relerr_trace = std::vector<double>(11 + k, 1.0 / static_cast<double>(k + 1));
    }
    const auto s = summarize("X", trials);
    CHECK(s.trials == 3);
    CHECK(s.mean_epochs == 11.0);
    CHECK(s.mean_iters == 1100.0);
    CHECK(s.mean_relerr == (relerr[0] + relerr[1] + relerr[2]) / 3.0);
    CHECK(s.mean_time_s == 0.25);
    const auto tr = mean_trace(trials);
    CHECK(tr.size() == 11);
    CHECK(tr[0] == doctest::Approx((1.0 + 0.5 + 1.0 / 3.0) / 3.0));
}

TEST_CASE("summary csv round trip") {
    const auto dir = scratch("csv");
    fs::create_directories(dir);
    std::vector<SolverSummary> rows{{"RK", 10, 11.8, 23600, 4.545748e-11, 0.0161464},
                                    {"EBRUS(10)", 3, 1.0 / 3.0, 945, 0.1 + 0.2, 1e-300}};
    write_summary_csv(dir / "s.csv", rows, {{"config_hash", "abc"}});
    CHECK(read_summary_csv(dir / "s.csv") == rows);
    fs::remove_all(dir);
}

TEST_CASE("config hash ignores output directory and threads") {
    auto a = small_config("/tmp/x");
    auto b = small_config("/tmp/y");
    b.threads = 4;
    CHECK(a.hash() == b.hash());
    b.master_seed = 8;
    CHECK(a.hash() != b.hash());
    auto c = small_config("/tmp/x");
    c.trials = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = small_config("/tmp/x");
    c.relerr_tol = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    CHECK(parse_step_rule("lambda-hat") == StepRule::LambdaHat);
    CHECK_THROWS_AS(parse_step_rule("magic"), InvalidInput);
}

TEST_CASE("cmd_run writes deterministic outputs") {
    const auto d1 = scratch("run1"), d2 = scratch("run2"), d3 = scratch("run3");
    const auto r1 = cmd_run(small_config(d1));
    cmd_run(small_config(d2));
    auto threaded = small_config(d3);
    threaded.threads = 3;
    const auto r3 = cmd_run(threaded);

    REQUIRE(fs::exists(d1 / "summary.csv"));
    REQUIRE(fs::exists(d1 / "rates.csv"));
    REQUIRE(fs::exists(d1 / "traces" / "BRUS_5_trial2.csv"));
    const auto s1 = snapshot(d1);
    CHECK(s1 == snapshot(d2));
    CHECK(s1 == snapshot(d3));
    CHECK(slurp(d1 / "traces" / "RK_trial0.csv").rfind("epoch,relerr\n0,1\n", 0) == 0);

    for (std::size_t k = 0; k < r1.summaries.size(); ++k) {
        CHECK(r1.summaries[k].mean_epochs == r3.summaries[k].mean_epochs);
        CHECK(r1.summaries[k].mean_relerr <= 1e-10);
    }
    for (const auto& solver : r1.trials)
        for (const auto& t : solver) {
            CHECK(t.record.relerr_trace.size() == t.record.epochs + 1);
            CHECK(t.record.converged);
        }

    auto back = read_summary_csv(d1 / "summary.csv");
    REQUIRE(back.size() == r1.summaries.size());
    for (std::size_t k = 0; k < back.size(); ++k) CHECK(back[k] == r1.summaries[k]);
    CHECK(slurp(d1 / "summary.csv").find("# rate.RK.eta_r=") != std::string::npos);
    for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST_CASE("cmd_run with max_epochs = 0") {
    const auto dir = scratch("zero");
    auto cfg = small_config(dir);
    cfg.max_epochs = 0;
    const auto r = cmd_run(cfg);
    for (const auto& s : r.summaries) {
        CHECK(s.mean_epochs == 0.0);
        CHECK(s.mean_iters == 0.0);
        CHECK(s.mean_relerr == 1.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("cmd_run records compatibility warnings") {
    const auto dir = scratch("warn");
    ExperimentConfig cfg = small_config(dir);
    cfg.problem.r = 10;
    cfg.problem.rhs = RhsMode::Inconsistent;
    cfg.solvers = {"BCUS(5)", "RK"};
    cfg.max_epochs = 20;
    const auto r = cmd_run(cfg);
    bool bcsi = false, brsi = false;
    for (const auto& w : r.warnings) {
        bcsi |= w.find("BCUS(5)") != std::string::npos;
        brsi |= w.find("RK") != std::string::npos && w.find("horizon") != std::string::npos;
    }
    CHECK(bcsi);
    CHECK(brsi);
    fs::remove_all(dir);
}

TEST_CASE("stepsize rules") {
    const auto p = make_synthetic({.m = 40, .n = 12, .r = 12, .kappa = 3, .consistent = true, .seed = 2});
    ExperimentConfig cfg;
    const auto brus = parse_solver_token("BRUS(4)", p.a);
    const auto dflt = resolve_solver(brus, p, cfg, 0);
    CHECK(dflt.spec.alpha_r == doctest::Approx(2.0 / dflt.lambda_hat_r));

    const auto bcus = resolve_solver(parse_solver_token("BCUS(4)", p.a), p, cfg, 0);
    CHECK(bcus.spec.alpha_c == doctest::Approx(1.0 / bcus.lambda_hat_c));

    const auto ebrus = resolve_solver(parse_solver_token("EBRUS(4)", p.a), p, cfg, 0);
    CHECK(ebrus.spec.alpha_r == doctest::Approx(2.0 / ebrus.lambda_hat_r));
    CHECK(ebrus.spec.alpha_c == doctest::Approx(2.0 / ebrus.lambda_hat_c));

    cfg.step_rule = StepRule::LambdaHat;
    cfg.lambda_factor = 1.5;
    const auto lh = resolve_solver(brus, p, cfg, 0);
    CHECK(lh.spec.alpha_r == doctest::Approx(1.5 / lh.lambda_hat_r));

    cfg.step_rule = StepRule::Explicit;
    CHECK_THROWS_AS(resolve_solver(brus, p, cfg, 0), InvalidInput);
    cfg.alpha = 0.01;
    CHECK(resolve_solver(brus, p, cfg, 0).spec.alpha_r == 0.01);

    ExperimentConfig plain;
    CHECK(resolve_solver(parse_solver_token("RK", p.a), p, plain, 0).spec.alpha_r ==
          doctest::Approx(1.0 / p.a.frobenius_sq()));
    CHECK_THROWS_AS(resolve_solver(parse_solver_token("DSGS", p.a), p, plain, 0), InvalidInput);
    CHECK_THROWS_AS(resolve_solver(parse_solver_token("BRSI:row=single", p.a), p, plain, 0), InvalidInput);
    plain.alpha = 0.001;
    CHECK(resolve_solver(parse_solver_token("DSGS", p.a), p, plain, 0).spec.alpha_r == 0.001);
}

TEST_CASE("sweep-stepsize") {
    const auto dir = scratch("sweep"), run_dir = scratch("sweep_run");
    auto cfg = small_config(dir);
    cfg.trials = 1;
    cfg.solvers = {"BRUS(5)"};
    CHECK_THROWS_AS(cmd_sweep_stepsize(cfg, "BRUS(5)", {}, true), InvalidInput);

    cmd_sweep_stepsize(cfg, "BRUS(5)", {2.0}, true);
    cmd_run(small_config(run_dir));
    auto run_cfg = small_config(run_dir);
    run_cfg.trials = 1;
    run_cfg.solvers = {"BRUS(5)"};
    cmd_run(run_cfg);
    // The single-alpha sweep trace equals the run trace (alpha = 2/lambda_hat is the default rule).
    std::string trace = slurp(run_dir / "traces" / "BRUS_5_trial0.csv");
    std::string sweep = slurp(dir / "sweep_stepsize.csv");
    std::istringstream ts(trace), ss(sweep);
    std::string a, b;
    std::vector<std::string> from_run, from_sweep;
    while (std::getline(ts, a))
        if (!a.empty() && a[0] != '#' && a != "epoch,relerr") from_run.push_back(a);
    while (std::getline(ss, b))
        if (!b.empty() && b[0] != '#' && b != "alpha,epoch,relerr") from_sweep.push_back(b.substr(b.find(',') + 1));
    CHECK(from_run == from_sweep);

    // Too large a multiple is flagged in the summary and the rate sidecar.
    const auto dir2 = scratch("sweep2");
    auto cfg2 = small_config(dir2);
    cfg2.trials = 2;
    cmd_sweep_stepsize(cfg2, "BRUS(5)", {0.5, 1.0, 6.0}, true);
    const auto summary = slurp(dir2 / "sweep_stepsize_summary.csv");
    CHECK(summary.find("\n6,2,") != std::string::npos);
    std::istringstream in(summary);
    std::string line;
    std::map<std::string, std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("alpha,", 0) == 0) continue;
        std::vector<std::string> cells;
        std::stringstream cs(line);
        std::string c;
        while (std::getline(cs, c, ',')) cells.push_back(c);
        rows[cells[0]] = cells;
    }
    CHECK(rows["6"][6] == "1");
    CHECK(rows["0.5"][6] == "0");
    // Larger stable stepsizes converge in fewer epochs.
    CHECK(parse_double(rows["1"][2]) < parse_double(rows["0.5"][2]));
    CHECK(slurp(dir2 / "rates.csv").find("BRUS(5)@alpha=6,convergent_r,0") != std::string::npos);
    for (const auto& d : {dir, run_dir, dir2}) fs::remove_all(d);
}

TEST_CASE("sweep-blocksize") {
    const auto dir = scratch("blocks"), run_dir = scratch("blocks_run");
    auto cfg = small_config(dir);
    cfg.trials = 2;
    cmd_sweep_blocksize(cfg, "BRUS", {1, 5, 500});
    const auto text = slurp(dir / "blocksize.csv");
    CHECK(text.find("block,trials,mean_epochs,mean_iters,mean_relerr,mean_time_s") != std::string::npos);
    CHECK(text.find("# warning=block size 500 skipped") != std::string::npos);
    CHECK(text.find("\n500,") == std::string::npos);
    CHECK_THROWS_AS(cmd_sweep_blocksize(cfg, "RK", {2}), InvalidInput);

    // One block size reproduces cmd_run.
    auto run_cfg = small_config(run_dir);
    run_cfg.trials = 2;
    run_cfg.solvers = {"BRUS(5)"};
    const auto r = cmd_run(run_cfg);
    const auto s = r.summaries.front();
    CHECK(text.find("\n5,2," + format_double(s.mean_epochs) + "," + format_double(s.mean_iters) + "," +
                    format_double(s.mean_relerr) + ",") != std::string::npos);
    fs::remove_all(dir);
    fs::remove_all(run_dir);
}

TEST_CASE("BRUS(1) reads as much of A per iteration as RK") {
    const auto p = make_synthetic({.m = 50, .n = 10, .r = 10, .kappa = 3, .consistent = true, .seed = 3});
    const auto brus = run(p, named_spec("BRUS", p.a, {.block = 1, .alpha = 0.5 / p.a.frobenius_sq() * 50}),
                          {.relerr_tol = 1e-10, .max_epochs = 5}, 1, 0);
    const auto rk = run(p, named_spec("RK", p.a), {.relerr_tol = 1e-10, .max_epochs = 5}, 1, 0);
    REQUIRE(brus.iters > 0);
    CHECK(static_cast<double>(brus.touched) / static_cast<double>(brus.iters) ==
          static_cast<double>(rk.touched) / static_cast<double>(rk.iters));
}

TEST_CASE("cmd_gen") {
    const auto d1 = scratch("gen1"), d2 = scratch("gen2");
    ExperimentConfig cfg;
    cfg.problem.m = 100;
    cfg.problem.n = 50;
    cfg.problem.r = 25;
    cfg.problem.kappa = 5;
    const auto p = cmd_gen(cfg, d1);
    cmd_gen(cfg, d2);
    CHECK(p.rank == 25);
    CHECK(slurp(d1 / "meta.txt").find("rank=25") != std::string::npos);
    CHECK(snapshot(d1) == snapshot(d2));

    // A run from the saved directory matches a run from the same synthetic parameters.
    ExperimentConfig from_dir;
    from_dir.problem.dir = d1.string();
    const auto q = load_or_make_problem(from_dir.problem, 1);
    CHECK(q.b == p.b);
    CHECK(q.rank == 25);

    cfg.problem.r = 60;
    CHECK_THROWS_AS(cmd_gen(cfg, scratch("gen3")), InvalidInput);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("cli: run, config file and environment") {
    const auto d1 = scratch("cli1"), d2 = scratch("cli2"), d3 = scratch("cli3"), d4 = scratch("cli4");
    const std::string flags = "--m 40 --n 10 --r 10 --solvers \"RK BRUS(4)\" --trials 2 --seed 3";
    REQUIRE(run_cli("run " + flags + " --out " + d1.string()) == 0);

    const auto ini = fs::temp_directory_path() / "rbi_test_experiment.ini";
    {
        std::ofstream out(ini);
        out << "[problem]\nm = 40\nn = 10\nr = 10\n\n[run]\nsolvers = \"RK BRUS(4)\"\ntrials = 2\nseed = 99\n";
    }
    // The command line overrides the file's seed.
    REQUIRE(run_cli("--config " + ini.string() + " run --seed 3 --out " + d2.string()) == 0);
    CHECK(snapshot(d1) == snapshot(d2));

    REQUIRE(run_cli("run " + flags, "RBI_OUTPUT_DIR=" + d3.string()) == 0);
    CHECK(snapshot(d1) == snapshot(d3));

    REQUIRE(run_cli("gen --m 30 --n 10 --r 5 --out " + d4.string()) == 0);
    CHECK(fs::exists(d4 / "A.mtx"));
    CHECK(run_cli("gen --m 30 --n 10 --r 50 --out " + d4.string()) != 0);
    CHECK(run_cli("run --m 30 --n 10 --solvers BOGUS --out " + d4.string()) != 0);
    CHECK(run_cli("run --m 30 --n 10 --solvers RK --bogus-flag 1") != 0);
    for (const auto& d : {d1, d2, d3, d4}) fs::remove_all(d);
    fs::remove(ini);
}
