#include "sncusum/nulldist.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sncusum/errors.hpp"
#include "sncusum/parallel.hpp"
#include "sncusum/rng.hpp"

namespace sncusum {

namespace {

double ratio_draw(NullKind kind, std::size_t steps, Engine& engine) {
    const double numerator = motion_sup(steps, engine);
    const double denominator =
        kind == NullKind::full_ratio ? motion_sup(steps, engine) : bridge_sup(steps, engine);
    return numerator / denominator;
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

template <class T>
T parse_field(std::string_view token, std::string_view key, const std::string& where) {
    if (token.substr(0, key.size()) != key)
        throw FormatError(where + ": expected '" + std::string(key) + "<value>', got '" +
                          std::string(token) + "'");
    token.remove_prefix(key.size());
    T value{};
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw FormatError(where + ": malformed value in '" + std::string(key) +
                          std::string(token) + "'");
    return value;
}

}  // namespace

std::string_view to_string(NullKind kind) {
    return kind == NullKind::simple_ratio ? "simple-ratio" : "full-ratio";
}

NullKind parse_null_kind(std::string_view text) {
    if (text == "simple-ratio") return NullKind::simple_ratio;
    if (text == "full-ratio") return NullKind::full_ratio;
    throw InvalidInput("unknown null kind '" + std::string(text) + "'");
}

double motion_sup(std::size_t steps, Engine& engine) {
    std::normal_distribution<double> normal;
    double walk = 0.0;
    double sup = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        walk += normal(engine);
        sup = std::max(sup, std::abs(walk));
    }
    return sup / std::sqrt(static_cast<double>(steps));
}

double bridge_sup(std::size_t steps, Engine& engine) {
    std::normal_distribution<double> normal;
    thread_local std::vector<double> path;
    path.resize(steps + 1);
    path[0] = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) path[i] = path[i - 1] + normal(engine);
    const double end = path[steps];
    const double m = static_cast<double>(steps);
    double sup = 0.0;
    for (std::size_t i = 1; i <= steps; ++i)
        sup = std::max(sup, std::abs(path[i] - static_cast<double>(i) / m * end));
    return sup / std::sqrt(m);
}

NullSample simulate_null(NullKind kind, std::size_t steps, std::size_t replications,
                         std::uint64_t seed, std::size_t workers) {
    if (steps < 100) throw InvalidInput("null simulation needs at least 100 grid steps");
    if (replications < 1000) throw InvalidInput("null simulation needs at least 1000 replications");

    NullSample out;
    out.provenance = NullProvenance{kind, steps, replications, seed};
    out.draws.resize(replications);
    parallel_for(replications, workers, [&](std::size_t i) {
        Engine engine = stream_engine(seed, i);
        out.draws[i] = ratio_draw(kind, steps, engine);
    });
    std::sort(out.draws.begin(), out.draws.end());
    return out;
}

double quantile(const NullSample& null, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw InvalidInput("quantile level must lie in (0, 1), got " + std::to_string(level));
    if (null.draws.empty()) throw InvalidInput("empty null sample");
    const auto n = static_cast<double>(null.draws.size());
    // The small offset keeps level*N that is an integer up to rounding on that integer.
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, null.draws.size());
    return null.draws[rank - 1];
}

double p_value(const NullSample& null, double observed) {
    if (std::isnan(observed)) throw InvalidInput("p-value of NaN statistic");
    const auto first = std::lower_bound(null.draws.begin(), null.draws.end(), observed);
    const auto at_least = static_cast<double>(null.draws.end() - first);
    return (1.0 + at_least) / (static_cast<double>(null.draws.size()) + 1.0);
}

QuantileTable quantile_table(const NullSample& null, const std::vector<double>& levels) {
    QuantileTable table;
    table.provenance = null.provenance;
    for (double level : levels) table.quantiles[level] = quantile(null, level);
    return table;
}

double kolmogorov_cdf(double x) {
    if (!(x > 0.0)) return 0.0;
    constexpr double tol = 1e-12;
    constexpr double pi = std::numbers::pi;
    if (x < 1.0) {
        // Theta-function form; converges fast for small x where the
        // alternating series does not.
        const double scale = std::sqrt(2.0 * pi) / x;
        double sum = 0.0;
        for (int k = 1; k < 1000; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * pi * pi / (8.0 * x * x));
            sum += term;
            if (scale * term < tol) break;
        }
        return std::clamp(scale * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k < 1000; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1) ? term : -term;
        if (term < tol) break;
    }
    return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

double kolmogorov_quantile(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw InvalidInput("Kolmogorov quantile level must lie in (0, 1)");
    double lo = 0.0;
    double hi = 2.0;
    while (kolmogorov_cdf(hi) < level) hi *= 2.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (kolmogorov_cdf(mid) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void cache_store(const NullSample& sample, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const auto& p = sample.provenance;
    out << "snq v1 " << to_string(p.kind) << " m=" << p.steps << " N=" << p.replications
        << " seed=" << p.seed << '\n';
    for (double d : sample.draws) out << format_double(d) << '\n';
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

NullSample cache_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open null cache '" + path.string() + "'");
    const std::string where = path.string();

    std::string header;
    if (!std::getline(in, header)) throw FormatError(where + ": empty file");
    std::istringstream hs(header);
    std::string magic, version, kind, m, n, seed, extra;
    hs >> magic >> version >> kind >> m >> n >> seed;
    if (magic != "snq") throw FormatError(where + ": not a null-sample cache (bad magic)");
    if (version != "v1") throw FormatError(where + ": unsupported cache version '" + version + "'");
    if (hs >> extra) throw FormatError(where + ": trailing tokens in header");

    NullSample out;
    try {
        out.provenance.kind = parse_null_kind(kind);
    } catch (const InvalidInput&) {
        throw FormatError(where + ": unknown kind '" + kind + "'");
    }
    out.provenance.steps = parse_field<std::size_t>(m, "m=", where);
    out.provenance.replications = parse_field<std::size_t>(n, "N=", where);
    out.provenance.seed = parse_field<std::uint64_t>(seed, "seed=", where);

    out.draws.reserve(out.provenance.replications);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double v = 0.0;
        auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc{} || res.ptr != line.data() + line.size())
            throw FormatError(where + ":" + std::to_string(line_no) + ": malformed draw");
        if (!(v > 0.0) || !std::isfinite(v))
            throw FormatError(where + ":" + std::to_string(line_no) + ": draw must be positive");
        if (!out.draws.empty() && v < out.draws.back())
            throw FormatError(where + ":" + std::to_string(line_no) + ": draws not ascending");
        out.draws.push_back(v);
    }
    if (out.draws.size() != out.provenance.replications)
        throw FormatError(where + ": header declares N=" +
                          std::to_string(out.provenance.replications) + " but file holds " +
                          std::to_string(out.draws.size()) + " draws");
    return out;
}

NullSample cache_load(const std::filesystem::path& path, const NullProvenance& expected) {
    NullSample sample = cache_read(path);
    const auto& got = sample.provenance;
    if (!(got == expected)) {
        std::ostringstream msg;
        msg << path.string() << ": cache holds " << to_string(got.kind) << " m=" << got.steps
            << " N=" << got.replications << " seed=" << got.seed << ", requested "
            << to_string(expected.kind) << " m=" << expected.steps
            << " N=" << expected.replications << " seed=" << expected.seed;
        throw ProvenanceError(msg.str());
    }
    return sample;
}

std::filesystem::path cache_file_name(const std::filesystem::path& dir, NullKind kind) {
    return dir / ("null_" + std::string(to_string(kind)) + ".snq");
}

}  // namespace sncusum
