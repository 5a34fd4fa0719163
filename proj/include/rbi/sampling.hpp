#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "rbi/matrix.hpp"
#include "rbi/random.hpp"

namespace rbi {

enum class Axis { Row, Column };

/// Index i with probability ||A_i||^2 / ||A||_F^2, scaled by ||A||_F / ||A_i||.
struct SingleIndexNormSq {};
/// Uniform l-subset of [dim], scaled by sqrt(dim / l).
struct UniformBlock {
    index_t block = 1;
};
/// Part I_k of a partition with probability ||A_{I_k}||_F^2 / ||A||_F^2, scaled by ||A||_F / ||A_{I_k}||_F.
struct PartitionNormSq {
    std::vector<IndexSet> parts;
};
/// Dense dim x width matrix with independent N(0, 1/width) entries.
struct Gaussian {
    index_t width = 1;
};
/// Coupled (S, T) pair: entry (i, j) with probability |A_ij|^2 / ||A||_F^2,
/// S = (||A||_F / |A_ij|) e_i and T = e_j.
struct EntryNormSq {};

using SketchKind = std::variant<SingleIndexNormSq, UniformBlock, PartitionNormSq, Gaussian, EntryNormSq>;

/// Declarative distribution of a random parameter matrix S (rows) or T (columns).
struct SketchSpec {
    Axis axis = Axis::Row;
    SketchKind kind = SingleIndexNormSq{};

    static SketchSpec single_index(Axis axis) { return {axis, SingleIndexNormSq{}}; }
    static SketchSpec uniform_block(Axis axis, index_t block) { return {axis, UniformBlock{block}}; }
    static SketchSpec partition(Axis axis, std::vector<IndexSet> parts) {
        return {axis, PartitionNormSq{std::move(parts)}};
    }
    /// Contiguous parts of size `block` (the last may be shorter).
    static SketchSpec contiguous_partition(Axis axis, index_t dim, index_t block);
    /// The single-part partition: S = I deterministically.
    static SketchSpec identity(Axis axis, index_t dim);
    static SketchSpec gaussian(Axis axis, index_t width) { return {axis, Gaussian{width}}; }
    static SketchSpec entries() { return {Axis::Row, EntryNormSq{}}; }

    bool is_selection() const;
    std::string describe() const;
};

/// One draw of S: either scale * I_{:, indices} or an explicit dense matrix.
struct SketchRealization {
    IndexSet indices;
    double scale = 1.0;
    DenseMatrix dense;

    bool is_dense() const { return dense.size() > 0; }
    double scale_sq() const { return scale * scale; }
    /// Explicit dim x p matrix, for oracles.
    DenseMatrix to_dense(index_t dim) const;
};

struct WeightedRealization {
    double probability = 0.0;
    SketchRealization realization;
};

/// Row/column sketch bound to a matrix: norm weights and cumulative tables are
/// computed once here and reused by every draw.
class BoundSketch {
  public:
    static constexpr std::size_t kDefaultEnumerationLimit = 1'000'000;

    BoundSketch(SketchSpec spec, const Matrix& a);

    const SketchSpec& spec() const { return spec_; }
    Axis axis() const { return spec_.axis; }
    index_t dim() const { return dim_; }
    /// Rows/columns touched per draw on average: 1, l, dim / #parts, or width.
    index_t block_size() const;
    /// ceil(dim / l) draws per epoch (number of parts for partitions).
    index_t epoch_iterations() const;

    SketchRealization draw(Rng& rng) const;

    /// Support size, saturating at `limit + 1`; 0 for continuous sketches.
    std::size_t support_size(std::size_t limit = kDefaultEnumerationLimit) const;
    bool enumerable(std::size_t limit = kDefaultEnumerationLimit) const;
    /// Every outcome with its probability. Throws InvalidInput when the support exceeds `limit`.
    std::vector<WeightedRealization> enumerate(std::size_t limit = kDefaultEnumerationLimit) const;
    /// Outcome probabilities as stored (normalized weights), for invariant checks.
    const std::vector<double>& probabilities() const { return probs_; }

  private:
    SketchSpec spec_;
    index_t dim_ = 0;
    double total_ = 0.0;
    std::vector<double> weights_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
    std::vector<IndexSet> parts_;

    std::size_t pick(Rng& rng) const;
    SketchRealization outcome(std::size_t k) const;
};

struct CoupledRealization {
    SketchRealization row;
    SketchRealization col;
};

struct WeightedPair {
    double probability = 0.0;
    CoupledRealization realization;
};

/// Distribution of the (S, T) pair used by the doubly stochastic iteration:
/// either the coupled entry sampler or two independent bound sketches.
class PairSketch {
  public:
    static PairSketch coupled_entries(const Matrix& a);
    static PairSketch independent(BoundSketch row, BoundSketch col);

    bool coupled() const { return row_ == nullptr; }
    /// Row stream drives S (and the coupled pair); column stream drives T.
    CoupledRealization draw(Rng& row_rng, Rng& col_rng) const;
    std::vector<WeightedPair> enumerate(std::size_t limit = BoundSketch::kDefaultEnumerationLimit) const;
    std::string describe() const;

  private:
    std::shared_ptr<const BoundSketch> row_;
    std::shared_ptr<const BoundSketch> col_;
    // Coupled entry table.
    std::vector<Triplet> entries_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

SketchRealization draw(const SketchSpec& spec, const Matrix& a, Rng& rng);

/// Uniform l-subset of [0, dim), sorted ascending. Floyd's algorithm, O(l) expected.
IndexSet sample_subset(index_t dim, index_t ell, Rng& rng);

/// Exact E[S S^T] by enumeration (UniformBlock limited to dim <= 12).
DenseMatrix expected_gram(const SketchSpec& spec, const Matrix& a);
/// Exact E[T T^T A^T S S^T] (n x m) by enumeration.
DenseMatrix expected_coupled_update(const PairSketch& pair, const Matrix& a);

/// C(n, k), saturating at `cap + 1`.
std::size_t binomial_capped(index_t n, index_t k, std::size_t cap);

}  // namespace rbi
