#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbi/problems.hpp"
#include "rbi/solvers.hpp"
#include "rbi/theory.hpp"

namespace rbi {

struct ProblemConfig {
    /// Saved problem directory (takes precedence), else a Matrix Market file, else synthetic.
    std::string dir;
    std::string mtx;
    RhsMode rhs = RhsMode::Consistent;
    index_t m = 0;
    index_t n = 0;
    index_t r = 0;
    double kappa = 5.0;
    /// Problem seed; defaults to the master seed.
    std::optional<std::uint64_t> seed;
};

enum class StepRule {
    /// RK/RCD/REK/REGS/DSGS: 1/||A||_F^2. BRUS 2/lambda_hat, BCUS 1/lambda_hat, EBRUS/EBCRUS 2/lambda_hat on both axes.
    Default,
    /// alpha (and alpha_c) as given.
    Explicit,
    /// alpha = lambda_factor / lambda_hat (alpha_c = lambda_factor_c / lambda_hat on columns).
    LambdaHat,
};

const char* step_rule_name(StepRule r);
StepRule parse_step_rule(const std::string& s);

struct ExperimentConfig {
    ProblemConfig problem;
    std::vector<std::string> solvers;
    std::size_t trials = 10;
    double relerr_tol = 1e-10;
    std::uint64_t max_epochs = 1000;
    std::uint64_t master_seed = 1;
    StepRule step_rule = StepRule::Default;
    std::optional<double> alpha;
    std::optional<double> alpha_c;
    double lambda_factor = 2.0;
    std::optional<double> lambda_factor_c;
    /// Block size for tokens without one, e.g. "BRUS".
    std::optional<index_t> block;
    std::optional<index_t> probe_sets;
    double eps = 1.0;
    unsigned threads = 1;
    std::filesystem::path output_dir = "rbi_out";

    void validate() const;
    /// Every setting that affects results (not the output directory or thread count).
    std::string canonical() const;
    std::uint64_t hash() const;
};

ProblemInstance load_or_make_problem(const ProblemConfig& pc, std::uint64_t master_seed);

/// A solver token: a named spec with an optional block ("BRUS(20)", "RK") or an explicit
/// family with sketches ("EBRSI:row=uniform(10)/col=gaussian(4)+absorb").
struct SolverToken {
    std::string text;
    std::string name;
    std::optional<index_t> block;
    bool explicit_family = false;
    std::optional<SketchSpec> row;
    std::optional<SketchSpec> col;
    bool absorb = false;
};
SolverToken parse_solver_token(const std::string& text, const Matrix& a);
/// Split a list on ';' or whitespace.
std::vector<std::string> split_list(const std::string& s);

struct ResolvedSolver {
    SolverSpec spec;
    double lambda_hat_r = 0.0;
    double lambda_hat_c = 0.0;
};

/// Build the spec for one trial. Stepsizes from lambda_hat draw on a stream keyed by (seed, trial, label).
ResolvedSolver resolve_solver(const SolverToken& tok, const ProblemInstance& p, const ExperimentConfig& cfg,
                              std::uint64_t trial, std::optional<double> lambda_factor_override = {},
                              std::optional<double> alpha_override = {});

struct TrialResult {
    RunRecord record;
    double alpha_r = 0.0;
    double alpha_c = 0.0;
};

struct SolverSummary {
    std::string solver;
    std::size_t trials = 0;
    double mean_epochs = 0.0;
    double mean_iters = 0.0;
    double mean_relerr = 0.0;
    double mean_time_s = 0.0;

    bool operator==(const SolverSummary&) const = default;
};

SolverSummary summarize(const std::string& label, const std::vector<TrialResult>& trials);
/// Mean trace over trials, truncated at the shortest trial.
std::vector<double> mean_trace(const std::vector<TrialResult>& trials);

/// Run `trials` trials of one solver; trials may run on `threads` workers, results are ordered by trial.
std::vector<TrialResult> run_trials(const ProblemInstance& p, const SolverToken& tok, const ExperimentConfig& cfg,
                                    std::optional<double> lambda_factor_override = {},
                                    std::optional<double> alpha_override = {});

struct RunReport {
    std::vector<SolverSummary> summaries;
    std::vector<std::vector<TrialResult>> trials;
    std::vector<std::string> warnings;
};

/// `run`: traces/<solver>_trial<k>.csv, summary.csv, rates.csv.
RunReport cmd_run(const ExperimentConfig& cfg);
/// `sweep-stepsize`: per-alpha mean traces (sweep_stepsize.csv), sweep_stepsize_summary.csv and rates.csv.
/// With `lambda_multiples` each value c means alpha = c / lambda_hat.
void cmd_sweep_stepsize(const ExperimentConfig& cfg, const std::string& solver, const std::vector<double>& alphas,
                        bool lambda_multiples);
/// `sweep-blocksize`: blocksize.csv with one row per block size.
void cmd_sweep_blocksize(const ExperimentConfig& cfg, const std::string& solver, const std::vector<index_t>& blocks);
/// `gen`: materialize the configured problem.
ProblemInstance cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& dir);
/// `rates`: rates.csv only.
void cmd_rates(const ExperimentConfig& cfg);

// CSV helpers.

std::string format_double(double v);
double parse_double(const std::string& s);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SolverSummary>& rows,
                       const std::vector<std::pair<std::string, std::string>>& meta);
std::vector<SolverSummary> read_summary_csv(const std::filesystem::path& path);
std::string sanitize_label(const std::string& label);

}  // namespace rbi
