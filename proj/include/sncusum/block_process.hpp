#pragma once

// Bivariate block-permuted partial-sum process.
//
// The sample X_1..X_n is cut into ell blocks of length b (plus a remainder
// of n - b*ell trailing observations). The permutation pi walks the blocks
// round-robin: positions 1..ell hit the first element of every block,
// positions ell+1..2*ell the second element, and so on; remainder indices are
// fixed points. With T = floor(t*n) and J = floor(s*n),
//
//     S(t, s) = (1/n) * sum_{i <= T, pi_i <= J} X_{pi_i}.
//
// t therefore controls how many elements of each block enter the sum and s
// which part of the original time axis is used. S(1, s) is the ordinary
// partial-sum process.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sncusum {

// Non-owning view of an observed series. Guarantees n >= 4 and finite values.
class SeriesView {
public:
    static constexpr std::size_t min_length = 4;

    explicit SeriesView(std::span<const double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

private:
    std::span<const double> values_;
};

struct BlockConfig {
    std::size_t n = 0;
    std::size_t block_length = 0;  // b
    std::size_t block_count = 0;   // ell = floor(n / b)

    // Number of t-knots past zero: floor(n / ell).
    std::size_t knot_count() const noexcept { return n / block_count; }
    // Indices covered by complete blocks; the rest are fixed points of pi.
    std::size_t blocked_length() const noexcept { return block_length * block_count; }
};

// Largest integer b with b^8 <= n^3, i.e. floor(n^(3/8)) without rounding
// trouble at perfect powers.
std::size_t default_block_length(std::size_t n);

// b defaults to floor(n^(3/8)) clamped below at 2; an override is used as is.
BlockConfig make_block_config(std::size_t n, std::optional<std::size_t> block_override = {});

// pi_k for 1-based k.
std::size_t permute_index(std::size_t k, const BlockConfig& cfg);

// floor(x * n) for x in [0, 1], tolerant to representation error so that
// e.g. x = k*ell/n maps back to exactly k*ell.
std::size_t grid_count(double x, std::size_t n);

// Precomputed partial sums for one series: O(n) memory, O(1) per query.
//
// Blocks are contiguous in the original ordering, so within-block prefix
// sums come from the global prefix sum. row_sums_ additionally stores, for
// every row count q = 0..b, the running total over blocks of the first q
// elements of each block; that turns a query into a handful of lookups.
class PartialSumGrid {
public:
    PartialSumGrid(const SeriesView& series, const BlockConfig& cfg);

    const BlockConfig& config() const noexcept { return cfg_; }
    std::size_t size() const noexcept { return cfg_.n; }

    // S with T = floor(t*n) and J = floor(s*n) given as integer counts.
    double at_counts(std::size_t t_count, std::size_t s_count) const;

    double partial_sum(double t, double s) const;
    // S evaluated at the t-knot floor(t*n/ell)*ell/n.
    double coarsened(double t, double s) const;

    // S(k*ell/n, j/n) for j = 0..n, i.e. the s-profile at t-knot k.
    std::vector<double> knot_profile(std::size_t knot) const;
    // S(1, j/n) for j = 0..n.
    std::vector<double> full_profile() const;

    // floor(t*n/ell), the knot index used by the coarsened process.
    std::size_t knot_of(double t) const;

private:
    double row_total(std::size_t rows, std::size_t blocks) const {
        return row_sums_[rows * (cfg_.block_count + 1) + blocks];
    }

    BlockConfig cfg_;
    std::vector<double> prefix_;    // prefix_[i] = X_1 + ... + X_i
    std::vector<double> row_sums_;  // (b+1) x (ell+1), row-major
};

double partial_sum(const SeriesView& series, const BlockConfig& cfg, double t, double s);
double coarsened_partial_sum(const SeriesView& series, const BlockConfig& cfg, double t, double s);

// (floor(t*n/ell) - 1) / (floor(n/ell) - 1); needs at least two knots.
double rescaled_time(double t, const BlockConfig& cfg);
// Same quantity addressed by knot index k = floor(t*n/ell).
double rescaled_knot(std::size_t knot, const BlockConfig& cfg);

}  // namespace sncusum
