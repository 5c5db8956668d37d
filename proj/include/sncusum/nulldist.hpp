#pragma once

// Monte-Carlo null distributions of the self-normalized ratios, their
// quantiles and p-values, the Kolmogorov distribution, and an on-disk cache.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sncusum/rng.hpp"

namespace sncusum {

enum class NullKind {
    simple_ratio,  // sup|W1| / sup|W2(u) - u W2(1)|
    full_ratio,    // sup|W1| / sup|W2|
};

std::string_view to_string(NullKind kind);
NullKind parse_null_kind(std::string_view text);

struct NullProvenance {
    NullKind kind = NullKind::full_ratio;
    std::size_t steps = 0;         // grid steps m per simulated path
    std::size_t replications = 0;  // N
    std::uint64_t seed = 0;

    bool operator==(const NullProvenance&) const = default;
};

struct NullSample {
    NullProvenance provenance;
    std::vector<double> draws;  // ascending, all > 0, size == replications

    NullKind kind() const noexcept { return provenance.kind; }
    std::size_t size() const noexcept { return draws.size(); }
};

inline constexpr std::size_t default_null_steps = 1000;
inline constexpr std::size_t default_null_replications = 100000;

// One ratio draw per replication; replication i uses stream_engine(seed, i),
// so the sample is identical for any worker count.
// Suprema of one simulated path on the grid {i/m}: a scaled Gaussian random
// walk W(i/m) = m^(-1/2) (Z_1 + ... + Z_i), or its bridge W(u) - u W(1).
// Each consumes exactly m normals from the engine.
double motion_sup(std::size_t steps, Engine& engine);
double bridge_sup(std::size_t steps, Engine& engine);

NullSample simulate_null(NullKind kind, std::size_t steps, std::size_t replications,
                         std::uint64_t seed, std::size_t workers = 0);

// Order statistic of rank ceil(level * N), 1-based.
double quantile(const NullSample& null, double level);

// (1 + #{draws >= observed}) / (N + 1).
double p_value(const NullSample& null, double observed);

struct QuantileTable {
    NullProvenance provenance;
    std::map<double, double> quantiles;  // level -> quantile
};

QuantileTable quantile_table(const NullSample& null,
                             const std::vector<double>& levels = {0.90, 0.95, 0.99});

// Limiting law of the sup-norm of a Brownian bridge.
double kolmogorov_cdf(double x);
double kolmogorov_quantile(double level);

// Text cache: header line "snq v1 <kind> m=<m> N=<N> seed=<seed>" followed by
// the sorted draws, one per line, printed with round-trip precision.
void cache_store(const NullSample& sample, const std::filesystem::path& path);
// Parses and validates a cache file without checking provenance.
NullSample cache_read(const std::filesystem::path& path);
// As cache_read, then rejects files whose header differs from `expected`.
NullSample cache_load(const std::filesystem::path& path, const NullProvenance& expected);

// Conventional file name for a cached sample of the given kind inside a
// cache directory.
std::filesystem::path cache_file_name(const std::filesystem::path& dir, NullKind kind);

}  // namespace sncusum
