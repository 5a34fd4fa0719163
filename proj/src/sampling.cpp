#include "rbi/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace rbi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const char* axis_name(Axis a) { return a == Axis::Row ? "row" : "column"; }

// Index of the first cumulative entry exceeding u * total.
std::size_t pick_cumulative(const std::vector<double>& cumulative, double total, Rng& rng) {
    const double target = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) {
        // target rounded up to total: take the last outcome with positive weight.
        it = std::lower_bound(cumulative.begin(), cumulative.end(), cumulative.back());
    }
    return static_cast<std::size_t>(it - cumulative.begin());
}

// Visit every k-subset of [0, n) in lexicographic order.
template <class F>
void for_each_subset(index_t n, index_t k, F&& f) {
    IndexSet idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        f(idx);
        index_t i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (index_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

SketchSpec SketchSpec::contiguous_partition(Axis axis, index_t dim, index_t block) {
    if (block < 1) throw InvalidInput("partition block size must be >= 1");
    std::vector<IndexSet> parts;
    for (index_t start = 0; start < dim; start += block) {
        IndexSet p;
        for (index_t i = start; i < std::min(dim, start + block); ++i) p.push_back(i);
        parts.push_back(std::move(p));
    }
    return partition(axis, std::move(parts));
}

SketchSpec SketchSpec::identity(Axis axis, index_t dim) {
    IndexSet all(static_cast<std::size_t>(dim));
    std::iota(all.begin(), all.end(), 0);
    return partition(axis, {std::move(all)});
}

bool SketchSpec::is_selection() const {
    return !std::holds_alternative<Gaussian>(kind) && !std::holds_alternative<EntryNormSq>(kind);
}

std::string SketchSpec::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const SingleIndexNormSq&) { os << "SingleIndexNormSq"; },
                   [&](const UniformBlock& u) { os << "UniformBlock(" << u.block << ")"; },
                   [&](const PartitionNormSq& p) { os << "PartitionNormSq(" << p.parts.size() << " parts)"; },
                   [&](const Gaussian& g) { os << "Gaussian(" << g.width << ")"; },
                   [&](const EntryNormSq&) { os << "EntryNormSq"; },
               },
               kind);
    if (!std::holds_alternative<EntryNormSq>(kind)) os << "[" << axis_name(axis) << "]";
    return os.str();
}

DenseMatrix SketchRealization::to_dense(index_t dim) const {
    if (is_dense()) return dense;
    DenseMatrix s = DenseMatrix::Zero(dim, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) s(indices[k], static_cast<Eigen::Index>(k)) = scale;
    return s;
}

BoundSketch::BoundSketch(SketchSpec spec, const Matrix& a) : spec_(std::move(spec)) {
    if (std::holds_alternative<EntryNormSq>(spec_.kind))
        throw InvalidInput("EntryNormSq is a coupled pair sketch; use PairSketch::coupled_entries");
    dim_ = spec_.axis == Axis::Row ? a.rows() : a.cols();
    if (dim_ < 1) throw InvalidInput("sketch bound to an empty axis");

    std::visit(overloaded{
                   [&](const SingleIndexNormSq&) {
                       weights_ = spec_.axis == Axis::Row ? a.row_norms_sq() : a.col_norms_sq();
                   },
                   [&](const UniformBlock& u) {
                       if (u.block < 1 || u.block > dim_) {
                           std::ostringstream os;
                           os << "UniformBlock requires 1 <= l <= " << dim_ << ", got " << u.block;
                           throw InvalidInput(os.str());
                       }
                   },
                   [&](const PartitionNormSq& p) {
                       std::vector<bool> covered(static_cast<std::size_t>(dim_), false);
                       const auto norms = spec_.axis == Axis::Row ? a.row_norms_sq() : a.col_norms_sq();
                       for (const auto& part : p.parts) {
                           if (part.empty()) throw InvalidInput("partition contains an empty part");
                           IndexSet sorted = part;
                           std::sort(sorted.begin(), sorted.end());
                           double w = 0.0;
                           for (index_t i : sorted) {
                               if (i < 0 || i >= dim_) throw InvalidInput("partition index out of range");
                               if (covered[i]) throw InvalidInput("partition parts overlap");
                               covered[i] = true;
                               w += norms[i];
                           }
                           parts_.push_back(std::move(sorted));
                           weights_.push_back(w);
                       }
                       if (std::find(covered.begin(), covered.end(), false) != covered.end())
                           throw InvalidInput("partition does not cover every index");
                   },
                   [&](const Gaussian& g) {
                       if (g.width < 1) throw InvalidInput("Gaussian sketch width must be >= 1");
                   },
                   [&](const EntryNormSq&) {},
               },
               spec_.kind);

    if (!weights_.empty()) {
        cumulative_.resize(weights_.size());
        std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
        total_ = cumulative_.back();
        if (!(total_ > 0.0)) {
            throw InvalidInput(std::string("norm-weighted sketch on an all-zero ") + axis_name(spec_.axis) +
                               " axis");
        }
        probs_.resize(weights_.size());
        for (std::size_t k = 0; k < weights_.size(); ++k) probs_[k] = weights_[k] / total_;
    }
}

index_t BoundSketch::block_size() const {
    return std::visit(overloaded{
                          [&](const SingleIndexNormSq&) -> index_t { return 1; },
                          [&](const UniformBlock& u) -> index_t { return u.block; },
                          [&](const PartitionNormSq&) -> index_t {
                              return (dim_ + static_cast<index_t>(parts_.size()) - 1) /
                                     static_cast<index_t>(parts_.size());
                          },
                          [&](const Gaussian& g) -> index_t { return g.width; },
                          [&](const EntryNormSq&) -> index_t { return 1; },
                      },
                      spec_.kind);
}

index_t BoundSketch::epoch_iterations() const {
    if (std::holds_alternative<PartitionNormSq>(spec_.kind)) return static_cast<index_t>(parts_.size());
    const index_t l = std::min(block_size(), dim_);
    return (dim_ + l - 1) / l;
}

std::size_t BoundSketch::pick(Rng& rng) const { return pick_cumulative(cumulative_, total_, rng); }

SketchRealization BoundSketch::outcome(std::size_t k) const {
    SketchRealization r;
    if (std::holds_alternative<SingleIndexNormSq>(spec_.kind)) {
        r.indices = {static_cast<index_t>(k)};
        r.scale = std::sqrt(total_ / weights_[k]);
    } else {
        r.indices = parts_[k];
        r.scale = std::sqrt(total_ / weights_[k]);
    }
    return r;
}

SketchRealization BoundSketch::draw(Rng& rng) const {
    return std::visit(overloaded{
                          [&](const UniformBlock& u) {
                              SketchRealization r;
                              r.indices = sample_subset(dim_, u.block, rng);
                              r.scale = std::sqrt(static_cast<double>(dim_) / static_cast<double>(u.block));
                              return r;
                          },
                          [&](const Gaussian& g) {
                              SketchRealization r;
                              r.dense.resize(dim_, g.width);
                              const double sd = 1.0 / std::sqrt(static_cast<double>(g.width));
                              for (Eigen::Index j = 0; j < r.dense.cols(); ++j)
                                  for (Eigen::Index i = 0; i < r.dense.rows(); ++i) r.dense(i, j) = sd * rng.normal();
                              return r;
                          },
                          [&](const auto&) { return outcome(pick(rng)); },
                      },
                      spec_.kind);
}

std::size_t BoundSketch::support_size(std::size_t limit) const {
    return std::visit(overloaded{
                          [&](const UniformBlock& u) { return binomial_capped(dim_, u.block, limit); },
                          [&](const Gaussian&) { return std::size_t{0}; },
                          [&](const auto&) {
                              return static_cast<std::size_t>(std::count_if(
                                  weights_.begin(), weights_.end(), [](double w) { return w > 0.0; }));
                          },
                      },
                      spec_.kind);
}

bool BoundSketch::enumerable(std::size_t limit) const {
    const auto s = support_size(limit);
    return s > 0 && s <= limit;
}

std::vector<WeightedRealization> BoundSketch::enumerate(std::size_t limit) const {
    if (std::holds_alternative<Gaussian>(spec_.kind))
        throw InvalidInput("Gaussian sketches have continuous support and cannot be enumerated");
    const auto size = support_size(limit);
    if (size > limit) {
        std::ostringstream os;
        os << spec_.describe() << ": support exceeds the enumeration bound of " << limit << " outcomes";
        throw InvalidInput(os.str());
    }
    std::vector<WeightedRealization> out;
    out.reserve(size);
    if (const auto* u = std::get_if<UniformBlock>(&spec_.kind)) {
        const double p = 1.0 / static_cast<double>(size);
        const double scale = std::sqrt(static_cast<double>(dim_) / static_cast<double>(u->block));
        for_each_subset(dim_, u->block, [&](const IndexSet& s) {
            out.push_back({p, SketchRealization{s, scale, {}}});
        });
        return out;
    }
    for (std::size_t k = 0; k < weights_.size(); ++k)
        if (weights_[k] > 0.0) out.push_back({probs_[k], outcome(k)});
    return out;
}

PairSketch PairSketch::coupled_entries(const Matrix& a) {
    PairSketch p;
    for (const auto& t : a.triplets())
        if (t.value != 0.0) p.entries_.push_back(t);
    if (p.entries_.empty()) throw InvalidInput("EntryNormSq on a zero matrix");
    p.cumulative_.resize(p.entries_.size());
    double run = 0.0;
    for (std::size_t k = 0; k < p.entries_.size(); ++k) {
        run += p.entries_[k].value * p.entries_[k].value;
        p.cumulative_[k] = run;
    }
    p.total_ = run;
    return p;
}

PairSketch PairSketch::independent(BoundSketch row, BoundSketch col) {
    if (row.axis() != Axis::Row || col.axis() != Axis::Column)
        throw InvalidInput("independent pair needs a row sketch and a column sketch");
    PairSketch p;
    p.row_ = std::make_shared<const BoundSketch>(std::move(row));
    p.col_ = std::make_shared<const BoundSketch>(std::move(col));
    return p;
}

namespace {

CoupledRealization entry_outcome(const Triplet& t, double total) {
    CoupledRealization r;
    r.row.indices = {t.row};
    r.row.scale = std::sqrt(total) / std::abs(t.value);
    r.col.indices = {t.col};
    r.col.scale = 1.0;
    return r;
}

}  // namespace

CoupledRealization PairSketch::draw(Rng& row_rng, Rng& col_rng) const {
    if (coupled()) return entry_outcome(entries_[pick_cumulative(cumulative_, total_, row_rng)], total_);
    return {row_->draw(row_rng), col_->draw(col_rng)};
}

std::vector<WeightedPair> PairSketch::enumerate(std::size_t limit) const {
    std::vector<WeightedPair> out;
    if (coupled()) {
        if (entries_.size() > limit) throw InvalidInput("EntryNormSq support exceeds the enumeration bound");
        for (const auto& t : entries_) out.push_back({t.value * t.value / total_, entry_outcome(t, total_)});
        return out;
    }
    const auto rows = row_->enumerate(limit);
    const auto cols = col_->enumerate(limit);
    if (rows.size() * cols.size() > limit) throw InvalidInput("pair support exceeds the enumeration bound");
    for (const auto& r : rows)
        for (const auto& c : cols) out.push_back({r.probability * c.probability, {r.realization, c.realization}});
    return out;
}

std::string PairSketch::describe() const {
    if (coupled()) return "EntryNormSq";
    return row_->spec().describe() + " x " + col_->spec().describe();
}

SketchRealization draw(const SketchSpec& spec, const Matrix& a, Rng& rng) { return BoundSketch(spec, a).draw(rng); }

IndexSet sample_subset(index_t dim, index_t ell, Rng& rng) {
    if (ell < 1 || ell > dim) {
        std::ostringstream os;
        os << "subset size " << ell << " must lie in [1, " << dim << "]";
        throw InvalidInput(os.str());
    }
    IndexSet out;
    out.reserve(static_cast<std::size_t>(ell));
    if (ell <= 32) {
        for (index_t j = dim - ell; j < dim; ++j) {
            const auto t = static_cast<index_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
            out.push_back(std::find(out.begin(), out.end(), t) == out.end() ? t : j);
        }
    } else {
        std::unordered_set<index_t> seen;
        seen.reserve(static_cast<std::size_t>(ell) * 2);
        for (index_t j = dim - ell; j < dim; ++j) {
            const auto t = static_cast<index_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
            const index_t pickv = seen.insert(t).second ? t : j;
            if (pickv == j) seen.insert(j);
            out.push_back(pickv);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

DenseMatrix expected_gram(const SketchSpec& spec, const Matrix& a) {
    const BoundSketch sketch(spec, a);
    if (std::holds_alternative<UniformBlock>(spec.kind) && sketch.dim() > 12)
        throw InvalidInput("expected_gram: UniformBlock enumeration is limited to dim <= 12");
    const index_t dim = sketch.dim();
    DenseMatrix g = DenseMatrix::Zero(dim, dim);
    for (const auto& [p, r] : sketch.enumerate()) {
        const double w = p * r.scale_sq();
        for (index_t i : r.indices) g(i, i) += w;
    }
    return g;
}

DenseMatrix expected_coupled_update(const PairSketch& pair, const Matrix& a) {
    // T T^T A^T S S^T is nonzero only on the (J, I) block, where it equals
    // sT^2 sS^2 (A_{I,J})^T.
    DenseMatrix e = DenseMatrix::Zero(a.cols(), a.rows());
    for (const auto& [p, r] : pair.enumerate()) {
        if (r.row.is_dense() || r.col.is_dense()) throw InvalidInput("expected_coupled_update needs selection sketches");
        const double w = p * r.row.scale_sq() * r.col.scale_sq();
        for (index_t j : r.col.indices)
            for (index_t i : r.row.indices) e(j, i) += w * a.entry(i, j);
    }
    return e;
}

std::size_t binomial_capped(index_t n, index_t k, std::size_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    // Multiplicative formula: c stays an exact integer at every step.
    unsigned __int128 c = 1;
    for (index_t i = 1; i <= k; ++i) {
        c = c * static_cast<unsigned __int128>(n - k + i) / static_cast<unsigned __int128>(i);
        if (c > cap) return cap + 1;
    }
    return static_cast<std::size_t>(c);
}

}  // namespace rbi
