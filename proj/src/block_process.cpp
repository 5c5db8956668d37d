#include "sncusum/block_process.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sncusum/errors.hpp"

namespace sncusum {

namespace {

using u128 = unsigned __int128;

u128 pow_u128(u128 base, int exponent) {
    u128 r = 1;
    for (int i = 0; i < exponent; ++i) r *= base;
    return r;
}

}  // namespace

SeriesView::SeriesView(std::span<const double> values) : values_(values) {
    if (values_.size() < min_length)
        throw InvalidInput("series needs at least " + std::to_string(min_length) +
                           " observations, got " + std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw InvalidInput("series value at position " + std::to_string(i + 1) +
                               " is not finite");
}

std::size_t default_block_length(std::size_t n) {
    if (n == 0) return 0;
    // b^8 <= n^3 overflows 128 bits only for n beyond ~1.8e12.
    const u128 cube = pow_u128(n, 3);
    auto b = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.375)));
    while (pow_u128(b + 1, 8) <= cube) ++b;
    while (b > 0 && pow_u128(b, 8) > cube) --b;
    return b;
}

BlockConfig make_block_config(std::size_t n, std::optional<std::size_t> block_override) {
    if (n < SeriesView::min_length)
        throw InvalidInput("sample size must be at least 4, got " + std::to_string(n));
    std::size_t b = 0;
    if (block_override) {
        b = *block_override;
        if (b < 1 || b > n)
            throw InvalidInput("block length " + std::to_string(b) + " outside [1, " +
                               std::to_string(n) + "]");
    } else {
        b = std::max<std::size_t>(2, default_block_length(n));
    }
    return BlockConfig{n, b, n / b};
}

std::size_t permute_index(std::size_t k, const BlockConfig& cfg) {
    if (k < 1 || k > cfg.n)
        throw InvalidInput("permutation index " + std::to_string(k) + " outside [1, " +
                           std::to_string(cfg.n) + "]");
    if (k > cfg.blocked_length()) return k;
    const std::size_t ell = cfg.block_count;
    return ((k - 1) % ell) * cfg.block_length + (k + ell - 1) / ell;
}

std::size_t grid_count(double x, std::size_t n) {
    if (!(x >= 0.0 && x <= 1.0))
        throw InvalidInput("grid coordinate " + std::to_string(x) + " outside [0, 1]");
    const double scaled = x * static_cast<double>(n);
    auto count = static_cast<std::size_t>(std::floor(scaled + 1e-9 * std::max(1.0, scaled)));
    return std::min(count, n);
}

PartialSumGrid::PartialSumGrid(const SeriesView& series, const BlockConfig& cfg) : cfg_(cfg) {
    if (series.size() != cfg.n)
        throw InvalidInput("series length " + std::to_string(series.size()) +
                           " does not match block configuration n=" + std::to_string(cfg.n));
    const std::size_t n = cfg.n;
    const std::size_t b = cfg.block_length;
    const std::size_t ell = cfg.block_count;

    prefix_.resize(n + 1);
    prefix_[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) prefix_[i + 1] = prefix_[i] + series[i];

    row_sums_.assign((b + 1) * (ell + 1), 0.0);
    for (std::size_t j = 0; j < ell; ++j) {
        double within = 0.0;
        const std::size_t start = j * b;
        for (std::size_t q = 0; q <= b; ++q) {
            if (q > 0) within += series[start + q - 1];
            row_sums_[q * (ell + 1) + j + 1] = row_sums_[q * (ell + 1) + j] + within;
        }
    }
}

double PartialSumGrid::at_counts(std::size_t t_count, std::size_t s_count) const {
    const std::size_t n = cfg_.n;
    if (t_count > n || s_count > n)
        throw InvalidInput("partial-sum counts exceed sample size");
    const std::size_t b = cfg_.block_length;
    const std::size_t ell = cfg_.block_count;
    const std::size_t blocked = cfg_.blocked_length();

    if (t_count > blocked) {
        // Every block element is in; remainder indices enter in original order.
        double sum = prefix_[std::min(s_count, blocked)];
        const std::size_t tail = std::min(t_count, s_count);
        if (tail > blocked) sum += prefix_[tail] - prefix_[blocked];
        return sum / static_cast<double>(n);
    }

    const std::size_t rows = t_count / ell;
    const std::size_t partial_row_blocks = t_count % ell;

    // Complete rows: first `rows` elements of every block lying below s.
    const std::size_t full_blocks = std::min(s_count / b, ell);
    double sum = row_total(rows, full_blocks);
    if (full_blocks < ell) {
        const std::size_t start = full_blocks * b;
        const std::size_t take = std::min(rows, s_count - start);
        sum += prefix_[start + take] - prefix_[start];
    }

    // Partial row: element rows+1 of the first `partial_row_blocks` blocks.
    if (partial_row_blocks > 0 && s_count >= rows + 1) {
        const std::size_t reachable = (s_count - rows - 1) / b + 1;
        const std::size_t m = std::min({partial_row_blocks, reachable, ell});
        sum += row_total(rows + 1, m) - row_total(rows, m);
    }
    return sum / static_cast<double>(n);
}

double PartialSumGrid::partial_sum(double t, double s) const {
    return at_counts(grid_count(t, cfg_.n), grid_count(s, cfg_.n));
}

std::size_t PartialSumGrid::knot_of(double t) const {
    return grid_count(t, cfg_.n) / cfg_.block_count;
}

double PartialSumGrid::coarsened(double t, double s) const {
    return at_counts(knot_of(t) * cfg_.block_count, grid_count(s, cfg_.n));
}

std::vector<double> PartialSumGrid::knot_profile(std::size_t knot) const {
    if (knot > cfg_.knot_count())
        throw InvalidInput("knot " + std::to_string(knot) + " beyond last knot " +
                           std::to_string(cfg_.knot_count()));
    const std::size_t t_count = knot * cfg_.block_count;
    std::vector<double> out(cfg_.n + 1);
    for (std::size_t j = 0; j <= cfg_.n; ++j) out[j] = at_counts(t_count, j);
    return out;
}

std::vector<double> PartialSumGrid::full_profile() const {
    std::vector<double> out(prefix_.size());
    const double inv_n = 1.0 / static_cast<double>(cfg_.n);
    std::transform(prefix_.begin(), prefix_.end(), out.begin(),
                   [inv_n](double v) { return v * inv_n; });
    return out;
}

double partial_sum(const SeriesView& series, const BlockConfig& cfg, double t, double s) {
    return PartialSumGrid(series, cfg).partial_sum(t, s);
}

double coarsened_partial_sum(const SeriesView& series, const BlockConfig& cfg, double t,
                             double s) {
    return PartialSumGrid(series, cfg).coarsened(t, s);
}

double rescaled_knot(std::size_t knot, const BlockConfig& cfg) {
    const std::size_t knots = cfg.knot_count();
    if (knots < 2)
        throw ConfigurationError("blocks too coarse: floor(n/ell) = " + std::to_string(knots) +
                                 " < 2");
    return (static_cast<double>(knot) - 1.0) / (static_cast<double>(knots) - 1.0);
}

double rescaled_time(double t, const BlockConfig& cfg) {
    return rescaled_knot(grid_count(t, cfg.n) / cfg.block_count, cfg);
}

}  // namespace sncusum
