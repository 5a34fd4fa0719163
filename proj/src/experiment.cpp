#include "rbi/experiment.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include "rbi/mtx_io.hpp"

namespace rbi {

const char* step_rule_name(StepRule r) {
    switch (r) {
        case StepRule::Default: return "default";
        case StepRule::Explicit: return "explicit";
        case StepRule::LambdaHat: return "lambda-hat";
    }
    return "?";
}

StepRule parse_step_rule(const std::string& s) {
    if (s == "default") return StepRule::Default;
    if (s == "explicit") return StepRule::Explicit;
    if (s == "lambda-hat") return StepRule::LambdaHat;
    throw InvalidInput("unknown stepsize rule '" + s + "' (expected default, explicit or lambda-hat)");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, static_cast<std::size_t>(res.ptr - buf));
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw InvalidInput("not a number: '" + s + "'");
    return v;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw InvalidInput("trials must be >= 1");
    if (!(relerr_tol > 0.0)) throw InvalidInput("relerr tolerance must be positive");
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    if (alpha && !(*alpha > 0.0)) throw InvalidInput("alpha must be positive");
    if (alpha_c && !(*alpha_c > 0.0)) throw InvalidInput("alpha_c must be positive");
    if (!(lambda_factor > 0.0)) throw InvalidInput("lambda factor must be positive");
    if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    os << "problem.dir=" << problem.dir << ";problem.mtx=" << problem.mtx
       << ";problem.rhs=" << (problem.rhs == RhsMode::Consistent ? "consistent" : "inconsistent")
       << ";problem.m=" << problem.m << ";problem.n=" << problem.n << ";problem.r=" << problem.r
       << ";problem.kappa=" << format_double(problem.kappa)
       << ";problem.seed=" << (problem.seed ? std::to_string(*problem.seed) : "") << ";solvers=";
    for (const auto& s : solvers) os << s << ' ';
    os << ";trials=" << trials << ";tol=" << format_double(relerr_tol) << ";max_epochs=" << max_epochs
       << ";seed=" << master_seed << ";rule=" << step_rule_name(step_rule)
       << ";alpha=" << (alpha ? format_double(*alpha) : "") << ";alpha_c=" << (alpha_c ? format_double(*alpha_c) : "")
       << ";lambda_factor=" << format_double(lambda_factor)
       << ";lambda_factor_c=" << (lambda_factor_c ? format_double(*lambda_factor_c) : "")
       << ";block=" << (block ? std::to_string(*block) : "")
       << ";probe_sets=" << (probe_sets ? std::to_string(*probe_sets) : "") << ";eps=" << format_double(eps);
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return hash_label(canonical().c_str()); }

ProblemInstance load_or_make_problem(const ProblemConfig& pc, std::uint64_t master_seed) {
    const std::uint64_t seed = pc.seed.value_or(master_seed);
    if (!pc.dir.empty()) return load_problem(pc.dir);
    if (!pc.mtx.empty()) {
        Matrix a = read_matrix_market(std::filesystem::path(pc.mtx));
        return make_from_matrix(std::move(a), pc.rhs, seed, std::filesystem::path(pc.mtx).filename().string());
    }
    SyntheticParams sp;
    sp.m = pc.m;
    sp.n = pc.n;
    sp.r = pc.r > 0 ? pc.r : std::min(pc.m, pc.n);
    sp.kappa = pc.kappa;
    sp.consistent = pc.rhs == RhsMode::Consistent;
    sp.seed = seed;
    return make_synthetic(sp);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ';' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

namespace {

SketchSpec parse_sketch(const std::string& text, Axis axis, const Matrix& a) {
    static const std::regex re(R"(^([a-z]+)(?:\((\d+)\))?$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw InvalidInput("malformed sketch '" + text + "'");
    const std::string kind = m[1];
    const bool has_arg = m[2].matched;
    const index_t arg = has_arg ? std::stoll(m[2]) : 0;
    const index_t dim = axis == Axis::Row ? a.rows() : a.cols();
    auto need_arg = [&] {
        if (!has_arg) throw InvalidInput("sketch '" + kind + "' needs a size argument");
    };
    if (kind == "single") return SketchSpec::single_index(axis);
    if (kind == "identity") return SketchSpec::identity(axis, dim);
    if (kind == "entries") return SketchSpec::entries();
    if (kind == "uniform") {
        need_arg();
        return SketchSpec::uniform_block(axis, arg);
    }
    if (kind == "partition") {
        need_arg();
        return SketchSpec::contiguous_partition(axis, dim, arg);
    }
    if (kind == "gaussian") {
        need_arg();
        return SketchSpec::gaussian(axis, arg);
    }
    throw InvalidInput("unknown sketch kind '" + kind + "'");
}

bool is_uniform_name(const std::string& name) {
    return name == "BRUS" || name == "BCUS" || name == "EBRUS" || name == "EBCRUS";
}

}  // namespace

SolverToken parse_solver_token(const std::string& text, const Matrix& a) {
    SolverToken t;
    t.text = text;
    static const std::regex named(R"(^([A-Z]+)(?:\((\d+)\))?$)");
    static const std::regex expl(R"(^(DSBI|BRSI|BCSI|EBRSI|EBCRSI):([^+]*)(\+absorb)?$)");
    std::smatch m;
    if (std::regex_match(text, m, named) && is_named_spec(m[1])) {
        t.name = m[1];
        if (m[2].matched) t.block = std::stoll(m[2]);
        return t;
    }
    if (std::regex_match(text, m, expl)) {
        t.explicit_family = true;
        t.name = m[1];
        t.absorb = m[3].matched;
        std::stringstream parts(m[2].str());
        std::string part;
        while (std::getline(parts, part, '/')) {
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw InvalidInput("expected row=... or col=... in '" + text + "'");
            const std::string side = part.substr(0, eq);
            const std::string body = part.substr(eq + 1);
            if (side == "row") {
                t.row = parse_sketch(body, Axis::Row, a);
            } else if (side == "col") {
                t.col = parse_sketch(body, Axis::Column, a);
            } else {
                throw InvalidInput("unknown sketch side '" + side + "' in '" + text + "'");
            }
        }
        return t;
    }
    throw InvalidInput("unknown solver '" + text +
                       "': expected a named solver (DSGS, RK, RCD, REK, REABK, REGS, BRUS, BCUS, EBRUS, EBCRUS) "
                       "or FAMILY:row=.../col=...");
}

ResolvedSolver resolve_solver(const SolverToken& tok, const ProblemInstance& p, const ExperimentConfig& cfg,
                              std::uint64_t trial, std::optional<double> lambda_factor_override,
                              std::optional<double> alpha_override) {
    ResolvedSolver out;
    const Matrix& a = p.a;
    if (tok.explicit_family) {
        SolverSpec s;
        s.family = parse_family(tok.name);
        s.row_sketch = tok.row;
        s.col_sketch = tok.col;
        s.absorb_scale = tok.absorb;
        const auto alpha = alpha_override ? alpha_override : cfg.alpha;
        if (!alpha) throw InvalidInput(tok.text + ": explicit solver specs need --alpha");
        s.alpha_r = *alpha;
        s.alpha_c = alpha_override ? *alpha_override : cfg.alpha_c.value_or(*alpha);
        if (s.family == Family::BCSI) s.alpha_c = *alpha;
        s.label = tok.text;
        s.validate();
        out.spec = s;
        return out;
    }

    NamedParams np;
    np.block = tok.block ? tok.block : cfg.block;
    if (is_uniform_name(tok.name)) {
        const index_t l = np.block ? *np.block : throw InvalidInput(tok.name + " needs a block size");
        const index_t lc = np.block.value();
        const bool rows = tok.name != "BCUS";
        const bool cols = tok.name != "BRUS";
        const std::string label = tok.name + "(" + std::to_string(l) + ")";
        if (alpha_override) {
            np.alpha = *alpha_override;
            np.alpha_c = *alpha_override;
        } else if (cfg.step_rule == StepRule::Explicit && !lambda_factor_override) {
            if (!cfg.alpha) throw InvalidInput(label + ": the explicit stepsize rule needs --alpha");
            np.alpha = cfg.alpha;
            np.alpha_c = cfg.alpha_c.value_or(*cfg.alpha);
        } else {
            double fr = 2.0, fc = tok.name == "BCUS" ? 1.0 : 2.0;
            if (lambda_factor_override) {
                fr = fc = *lambda_factor_override;
            } else if (cfg.step_rule == StepRule::LambdaHat) {
                fr = cfg.lambda_factor;
                fc = cfg.lambda_factor_c.value_or(cfg.lambda_factor);
            }
            Rng rng = Rng::stream(cfg.master_seed, trial, hash_label(("lambda_hat/" + label).c_str()));
            if (rows) out.lambda_hat_r = lambda_hat(a, l, Axis::Row, rng, cfg.probe_sets);
            if (cols) out.lambda_hat_c = lambda_hat(a, lc, Axis::Column, rng, cfg.probe_sets);
            if (rows && !(out.lambda_hat_r > 0.0)) throw InvalidInput(label + ": lambda_hat is zero");
            if (cols && !(out.lambda_hat_c > 0.0)) throw InvalidInput(label + ": lambda_hat is zero");
            if (tok.name == "BCUS") {
                np.alpha = fc / out.lambda_hat_c;
            } else {
                np.alpha = fr / out.lambda_hat_r;
                if (cols) np.alpha_c = fc / out.lambda_hat_c;
            }
        }
    } else {
        if (lambda_factor_override)
            throw InvalidInput(tok.name + ": lambda_hat stepsizes apply to the uniform block solvers only");
        if (alpha_override) {
            np.alpha = alpha_override;
            np.alpha_c = alpha_override;
        } else if (cfg.step_rule == StepRule::Explicit || tok.name == "DSGS") {
            if (!cfg.alpha) throw InvalidInput(tok.name + ": needs --alpha");
            np.alpha = cfg.alpha;
            np.alpha_c = cfg.alpha_c;
        }
    }
    out.spec = named_spec(tok.name, a, np);
    return out;
}

SolverSummary summarize(const std::string& label, const std::vector<TrialResult>& trials) {
    SolverSummary s;
    s.solver = label;
    s.trials = trials.size();
    if (trials.empty()) return s;
    for (const auto& t : trials) {
        s.mean_epochs += static_cast<double>(t.record.epochs);
        s.mean_iters += static_cast<double>(t.record.iters);
        s.mean_relerr += t.record.final_relerr;
        s.mean_time_s += t.record.wall_time_s;
    }
    const auto k = static_cast<double>(trials.size());
    s.mean_epochs /= k;
    s.mean_iters /= k;
    s.mean_relerr /= k;
    s.mean_time_s /= k;
    return s;
}

std::vector<double> mean_trace(const std::vector<TrialResult>& trials) {
    if (trials.empty()) return {};
    std::size_t len = trials.front().record.relerr_trace.size();
    for (const auto& t : trials) len = std::min(len, t.record.relerr_trace.size());
    std::vector<double> out(len, 0.0);
    for (const auto& t : trials)
        for (std::size_t e = 0; e < len; ++e) out[e] += t.record.relerr_trace[e];
    for (auto& v : out) v /= static_cast<double>(trials.size());
    return out;
}

std::vector<TrialResult> run_trials(const ProblemInstance& p, const SolverToken& tok, const ExperimentConfig& cfg,
                                    std::optional<double> lambda_factor_override,
                                    std::optional<double> alpha_override) {
    std::vector<TrialResult> results(cfg.trials);
    StopRule stop;
    stop.relerr_tol = cfg.relerr_tol;
    stop.max_epochs = cfg.max_epochs;

    auto one = [&](std::size_t trial) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto resolved = resolve_solver(tok, p, cfg, trial, lambda_factor_override, alpha_override);
        const Solver solver(p.a, p.b, resolved.spec);
        TrialResult r;
        r.record = run(solver, p, stop, cfg.master_seed, trial);
        // Stepsize estimation counts toward the solver's time.
        r.record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.alpha_r = resolved.spec.alpha_r;
        r.alpha_c = resolved.spec.alpha_c;
        results[trial] = std::move(r);
    };

    const unsigned workers = std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.trials));
    if (workers <= 1) {
        for (std::size_t t = 0; t < cfg.trials; ++t) one(t);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t t = next++; t < cfg.trials; t = next++) {
                try {
                    one(t);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

std::string sanitize_label(const std::string& label) {
    std::string out;
    for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_meta(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& meta) {
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

void write_trace(const std::filesystem::path& path, const std::vector<double>& trace) {
    auto out = open_out(path);
    out << "epoch,relerr\n";
    for (std::size_t e = 0; e < trace.size(); ++e) out << e << ',' << format_double(trace[e]) << '\n';
}

std::vector<std::pair<std::string, std::string>> base_meta(const ExperimentConfig& cfg, const ProblemInstance& p) {
    std::ostringstream h;
    h << std::hex << cfg.hash();
    return {{"config_hash", h.str()},
            {"master_seed", std::to_string(cfg.master_seed)},
            {"problem", p.label},
            {"rows", std::to_string(p.rows())},
            {"cols", std::to_string(p.cols())},
            {"rank", std::to_string(p.rank)},
            {"consistent", p.consistent ? "1" : "0"},
            {"trials", std::to_string(cfg.trials)},
            {"relerr_tol", format_double(cfg.relerr_tol)},
            {"max_epochs", std::to_string(cfg.max_epochs)},
            {"step_rule", step_rule_name(cfg.step_rule)}};
}

std::vector<std::string> compatibility_warnings(const ProblemInstance& p, const SolverSpec& spec) {
    std::vector<std::string> w;
    if (spec.family == Family::BCSI && !p.consistent && p.rank < p.cols())
        w.push_back(spec.label + ": BCSI on a rank-deficient inconsistent system converges only in A(x - A^+ b)");
    if (spec.family == Family::BRSI && !p.consistent)
        w.push_back(spec.label + ": BRSI on an inconsistent system stalls at a convergence horizon");
    if (spec.family == Family::DSBI && !p.consistent)
        w.push_back(spec.label + ": DSBI on an inconsistent system stalls at a convergence horizon");
    return w;
}

RateOptions harness_rate_options(const ExperimentConfig& cfg) {
    RateOptions o;
    o.eps = cfg.eps;
    o.enumeration_limit = 100000;
    o.seed = cfg.master_seed;
    o.num_probe_sets = cfg.probe_sets;
    return o;
}

/// Rate report rows for one spec, or a warning when the constants are out of reach.
void append_rates(std::vector<std::array<std::string, 3>>& rows, std::vector<std::string>& warnings,
                  const std::string& label, const ProblemInstance& p, const SolverSpec& spec,
                  const ExperimentConfig& cfg) {
    try {
        if (spec.family == Family::DSBI && p.cols() > 200)
            throw InvalidInput("beta needs n x n enumeration; skipped for n > 200");
        const auto r = rate_report(p, spec, harness_rate_options(cfg));
        for (const auto& [k, v] : r.fields()) rows.push_back({label, k, v});
    } catch (const std::exception& e) {
        warnings.push_back(label + ": no rate report (" + e.what() + ")");
    }
}

void write_rates(const std::filesystem::path& path, const std::vector<std::array<std::string, 3>>& rows,
                 const std::vector<std::pair<std::string, std::string>>& meta) {
    auto out = open_out(path);
    write_meta(out, meta);
    out << "solver,key,value\n";
    for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << '\n';
}

}  // namespace

void write_summary_csv(const std::filesystem::path& path, const std::vector<SolverSummary>& rows,
                       const std::vector<std::pair<std::string, std::string>>& meta) {
    auto out = open_out(path);
    write_meta(out, meta);
    out << "solver,trials,mean_epochs,mean_iters,mean_relerr,mean_time_s\n";
    for (const auto& s : rows)
        out << s.solver << ',' << s.trials << ',' << format_double(s.mean_epochs) << ',' << format_double(s.mean_iters)
            << ',' << format_double(s.mean_relerr) << ',' << format_double(s.mean_time_s) << '\n';
}

std::vector<SolverSummary> read_summary_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<SolverSummary> rows;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "solver,trials,mean_epochs,mean_iters,mean_relerr,mean_time_s")
                throw InvalidInput(path.string() + ": unexpected summary header");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw InvalidInput(path.string() + ": summary row needs 6 fields");
        SolverSummary s;
        s.solver = f[0];
        s.trials = std::stoull(f[1]);
        s.mean_epochs = parse_double(f[2]);
        s.mean_iters = parse_double(f[3]);
        s.mean_relerr = parse_double(f[4]);
        s.mean_time_s = parse_double(f[5]);
        rows.push_back(s);
    }
    return rows;
}

RunReport cmd_run(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.solvers.empty()) throw InvalidInput("run: no solvers given");
    const ProblemInstance p = load_or_make_problem(cfg.problem, cfg.master_seed);
    std::filesystem::create_directories(cfg.output_dir / "traces");

    RunReport report;
    std::vector<std::array<std::string, 3>> rate_rows;
    for (const auto& text : cfg.solvers) {
        const SolverToken tok = parse_solver_token(text, p.a);
        auto trials = run_trials(p, tok, cfg);
        const SolverSpec spec = resolve_solver(tok, p, cfg, 0).spec;
        const std::string& label = spec.label;
        for (auto& w : compatibility_warnings(p, spec)) report.warnings.push_back(std::move(w));
        for (const auto& t : trials)
            write_trace(cfg.output_dir / "traces" /
                            (sanitize_label(label) + "_trial" + std::to_string(t.record.trial_index) + ".csv"),
                        t.record.relerr_trace);
        report.summaries.push_back(summarize(label, trials));
        append_rates(rate_rows, report.warnings, label, p, spec, cfg);
        report.trials.push_back(std::move(trials));
    }
    auto meta = base_meta(cfg, p);
    for (const auto& w : report.warnings) meta.emplace_back("warning", w);
    auto summary_meta = meta;
    for (const auto& r : rate_rows) summary_meta.emplace_back("rate." + r[0] + "." + r[1], r[2]);
    write_summary_csv(cfg.output_dir / "summary.csv", report.summaries, summary_meta);
    write_rates(cfg.output_dir / "rates.csv", rate_rows, meta);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return report;
}

void cmd_sweep_stepsize(const ExperimentConfig& cfg, const std::string& solver, const std::vector<double>& alphas,
                        bool lambda_multiples) {
    cfg.validate();
    if (alphas.empty()) throw InvalidInput("sweep-stepsize: empty alpha list");
    for (double a : alphas)
        if (!(a > 0.0)) throw InvalidInput("sweep-stepsize: stepsizes must be positive");
    const ProblemInstance p = load_or_make_problem(cfg.problem, cfg.master_seed);
    std::filesystem::create_directories(cfg.output_dir);
    const SolverToken tok = parse_solver_token(solver, p.a);

    std::vector<std::array<std::string, 3>> rate_rows;
    std::vector<std::string> warnings;
    auto traces = open_out(cfg.output_dir / "sweep_stepsize.csv");
    auto summary = open_out(cfg.output_dir / "sweep_stepsize_summary.csv");
    auto meta = base_meta(cfg, p);
    meta.emplace_back("solver", solver);
    meta.emplace_back("alpha_mode", lambda_multiples ? "lambda-hat-multiple" : "absolute");
    std::ostringstream body_traces, body_summary;
    for (double a : alphas) {
        const std::optional<double> factor = lambda_multiples ? std::optional<double>(a) : std::nullopt;
        const std::optional<double> absolute = lambda_multiples ? std::nullopt : std::optional<double>(a);
        const auto trials = run_trials(p, tok, cfg, factor, absolute);
        const auto spec = resolve_solver(tok, p, cfg, 0, factor, absolute).spec;
        const auto tr = mean_trace(trials);
        for (std::size_t e = 0; e < tr.size(); ++e)
            body_traces << format_double(a) << ',' << e << ',' << format_double(tr[e]) << '\n';
        const auto s = summarize(spec.label, trials);

        std::vector<std::array<std::string, 3>> rows;
        append_rates(rows, warnings, spec.label + "@alpha=" + format_double(a), p, spec, cfg);
        bool divergent = false;
        for (const auto& r : rows)
            if ((r[1] == "convergent_r" || r[1] == "convergent_c") && r[2] == "0") divergent = true;
        rate_rows.insert(rate_rows.end(), rows.begin(), rows.end());
        body_summary << format_double(a) << ',' << s.trials << ',' << format_double(s.mean_epochs) << ','
                     << format_double(s.mean_iters) << ',' << format_double(s.mean_relerr) << ','
                     << format_double(s.mean_time_s) << ',' << (divergent ? 1 : 0) << '\n';
    }
    for (const auto& w : warnings) meta.emplace_back("warning", w);
    write_meta(traces, meta);
    traces << "alpha,epoch,relerr\n" << body_traces.str();
    write_meta(summary, meta);
    summary << "alpha,trials,mean_epochs,mean_iters,mean_relerr,mean_time_s,divergent\n" << body_summary.str();
    write_rates(cfg.output_dir / "rates.csv", rate_rows, meta);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void cmd_sweep_blocksize(const ExperimentConfig& cfg, const std::string& solver, const std::vector<index_t>& blocks) {
    cfg.validate();
    if (blocks.empty()) throw InvalidInput("sweep-blocksize: empty block list");
    const ProblemInstance p = load_or_make_problem(cfg.problem, cfg.master_seed);
    std::filesystem::create_directories(cfg.output_dir);
    static const std::regex base(R"(^([A-Z]+)(?:\(\d+\))?$)");
    std::smatch m;
    if (!std::regex_match(solver, m, base) || !is_uniform_name(m[1]))
        throw InvalidInput("sweep-blocksize: expected BRUS, BCUS, EBRUS or EBCRUS, got '" + solver + "'");
    const std::string name = m[1];
    const index_t dim = name == "BRUS" ? p.rows() : name == "BCUS" ? p.cols() : std::min(p.rows(), p.cols());

    std::vector<std::string> warnings;
    std::vector<SolverSummary> rows;
    std::vector<index_t> used;
    for (index_t l : blocks) {
        if (l < 1 || l > dim) {
            warnings.push_back("block size " + std::to_string(l) + " skipped: must lie in [1, " +
                               std::to_string(dim) + "]");
            continue;
        }
        const SolverToken tok = parse_solver_token(name + "(" + std::to_string(l) + ")", p.a);
        rows.push_back(summarize(tok.text, run_trials(p, tok, cfg)));
        used.push_back(l);
    }
    auto meta = base_meta(cfg, p);
    meta.emplace_back("solver", name);
    for (const auto& w : warnings) meta.emplace_back("warning", w);
    auto out = open_out(cfg.output_dir / "blocksize.csv");
    write_meta(out, meta);
    out << "block,trials,mean_epochs,mean_iters,mean_relerr,mean_time_s\n";
    for (std::size_t k = 0; k < rows.size(); ++k)
        out << used[k] << ',' << rows[k].trials << ',' << format_double(rows[k].mean_epochs) << ','
            << format_double(rows[k].mean_iters) << ',' << format_double(rows[k].mean_relerr) << ','
            << format_double(rows[k].mean_time_s) << '\n';
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

ProblemInstance cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    ProblemInstance p = load_or_make_problem(cfg.problem, cfg.master_seed);
    save_problem(p, dir);
    return p;
}

void cmd_rates(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.solvers.empty()) throw InvalidInput("rates: no solvers given");
    const ProblemInstance p = load_or_make_problem(cfg.problem, cfg.master_seed);
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::array<std::string, 3>> rows;
    std::vector<std::string> warnings;
    for (const auto& text : cfg.solvers) {
        const SolverToken tok = parse_solver_token(text, p.a);
        const auto spec = resolve_solver(tok, p, cfg, 0).spec;
        append_rates(rows, warnings, spec.label, p, spec, cfg);
    }
    auto meta = base_meta(cfg, p);
    for (const auto& w : warnings) meta.emplace_back("warning", w);
    write_rates(cfg.output_dir / "rates.csv", rows, meta);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace rbi
