#pragma once

#include <cstdint>

namespace rbi {

/// Seedable generator with a 256-bit xoshiro256** state.
///
/// Every distribution used by the library is derived here from raw 64-bit
/// output (no std:: distributions), so a seed reproduces the same stream on
/// every platform and standard library.
class Rng {
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0);

    /// Independent stream for (master_seed, trial_index, stream_tag).
    static Rng stream(std::uint64_t master_seed, std::uint64_t trial_index, std::uint64_t stream_tag);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next(); }

    std::uint64_t next();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound), unbiased.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via the Box-Muller transform (pairs cached).
    double normal();

  private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);
/// Stable 64-bit FNV-1a hash, used to turn labels into stream tags.
std::uint64_t hash_label(const char* text, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace rbi
