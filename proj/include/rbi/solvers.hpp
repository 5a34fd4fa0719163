#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbi/matrix.hpp"
#include "rbi/problems.hpp"
#include "rbi/random.hpp"
#include "rbi/sampling.hpp"

namespace rbi {

enum class Family { DSBI, BRSI, BCSI, EBRSI, EBCRSI };

const char* family_name(Family f);
Family parse_family(const std::string& name);

struct SolverSpec {
    Family family = Family::BRSI;
    std::optional<SketchSpec> row_sketch;
    std::optional<SketchSpec> col_sketch;
    /// Row stepsize (the single stepsize for DSBI).
    double alpha_r = 1.0;
    double alpha_c = 1.0;
    /// Drop the selection scale^2 from the step; the stepsize already carries it.
    bool absorb_scale = false;
    std::string label;

    /// Throws InvalidInput when the sketches do not match the family.
    void validate() const;
};

struct SolverState {
    Vector x;
    /// EBRSI: length m, EBCRSI: length n, empty otherwise.
    Vector z;
    /// BCSI: b - A x. EBCRSI: b - A z. Empty otherwise.
    Vector r;
    std::uint64_t iter_count = 0;
    std::uint64_t epoch_count = 0;
    /// Nonzeros of A read by the steps so far.
    std::uint64_t touched = 0;
};

// Single steps. `absorb` drops scale^2 for selection sketches.

void brsi_step(SolverState& s, const Matrix& a, std::span<const double> b, const SketchRealization& row,
               double alpha_r, bool absorb = false);
void bcsi_step(SolverState& s, const Matrix& a, const SketchRealization& col, double alpha_c, bool absorb = false);
void ebrsi_step(SolverState& s, const Matrix& a, std::span<const double> b, const SketchRealization& row,
                const SketchRealization& col, double alpha_r, double alpha_c, bool absorb = false);
void ebcrsi_step(SolverState& s, const Matrix& a, const SketchRealization& row, const SketchRealization& col,
                 double alpha_r, double alpha_c, bool absorb = false);
void dsbi_step(SolverState& s, const Matrix& a, std::span<const double> b, const CoupledRealization& st,
               double alpha, bool absorb = false);

/// A SolverSpec bound to a system: sketches are bound once, steps draw from them.
class Solver {
  public:
    Solver(const Matrix& a, std::span<const double> b, SolverSpec spec);

    const SolverSpec& spec() const { return spec_; }
    /// Iterations per epoch.
    index_t epoch_length() const { return epoch_; }

    /// x0 defaults to 0; z0 to b (EBRSI) or 0 (EBCRSI).
    SolverState initial_state(std::optional<Vector> x0 = std::nullopt, std::optional<Vector> z0 = std::nullopt) const;
    void step(SolverState& s, Rng& row_rng, Rng& col_rng) const;

    const std::optional<BoundSketch>& row_sketch() const { return row_; }
    const std::optional<BoundSketch>& col_sketch() const { return col_; }
    const std::optional<PairSketch>& pair_sketch() const { return pair_; }

  private:
    const Matrix* a_;
    Vector b_;
    SolverSpec spec_;
    std::optional<BoundSketch> row_;
    std::optional<BoundSketch> col_;
    std::optional<PairSketch> pair_;
    index_t epoch_ = 1;
};

/// ||r - (b - A v)||, for the maintained residual of BCSI (v = x) or EBCRSI (v = z).
double residual_drift(const SolverState& s, const Matrix& a, std::span<const double> b, Family family);

struct StopRule {
    double relerr_tol = 1e-10;
    std::uint64_t max_epochs = 1000;
};

struct RunRecord {
    std::string solver_label;
    std::uint64_t trial_index = 0;
    std::uint64_t epochs = 0;
    std::uint64_t iters = 0;
    double final_relerr = 0.0;
    double wall_time_s = 0.0;
    std::vector<double> relerr_trace;
    bool converged = false;
    /// Set when ||A^+ b|| = 0: the trace holds ||x - A^+ b||^2 instead.
    bool absolute_error = false;
    /// Largest maintained-residual drift seen at an epoch boundary (BCSI / EBCRSI).
    double max_residual_drift = 0.0;
    std::uint64_t touched = 0;
    std::uint64_t seed = 0;
};

/// The (row, column) generator pair for one trial of one solver.
struct TrialStreams {
    Rng row;
    Rng col;
};
TrialStreams trial_streams(std::uint64_t master_seed, std::uint64_t trial, const std::string& label);

/// relerr = ||x - ref||^2 / ||ref||^2, or the absolute error when ref = 0.
double relative_error(std::span<const double> x, std::span<const double> ref);

RunRecord run(const ProblemInstance& p, const SolverSpec& spec, const StopRule& stop, std::uint64_t master_seed,
              std::uint64_t trial);
RunRecord run(const Solver& solver, const ProblemInstance& p, const StopRule& stop, std::uint64_t master_seed,
              std::uint64_t trial);

struct NamedParams {
    /// Block size for uniform sketches and the contiguous partitions of REABK.
    std::optional<index_t> block;
    /// Column block size when it differs from `block`.
    std::optional<index_t> col_block;
    std::optional<double> alpha;
    std::optional<double> alpha_c;
    std::optional<std::vector<IndexSet>> row_parts;
    std::optional<std::vector<IndexSet>> col_parts;
};

/// DSGS, RK, RCD, REK, REABK, REGS, BRUS, BCUS, EBRUS, EBCRUS.
SolverSpec named_spec(const std::string& name, const Matrix& a, const NamedParams& params = {});
bool is_named_spec(const std::string& name);

}  // namespace rbi
