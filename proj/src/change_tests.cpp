#include "sncusum/change_tests.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sncusum/errors.hpp"

namespace sncusum {

namespace {

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidInput("alpha must lie in (0, 1), got " + std::to_string(alpha));
}

}  // namespace

TestParams TestParams::for_variant(Variant v, double alpha) {
    TestParams p;
    p.alpha = alpha;
    p.t0 = 1.0 / 3.0;
    p.t1 = v == Variant::v1 ? 2.0 / 3.0 : 0.5;
    return p;
}

void TestParams::validate() const {
    check_alpha(alpha);
    if (!(t0 > 0.0 && t0 < t1 && t1 < 1.0))
        throw InvalidInput("need 0 < t0 < t1 < 1, got t0=" + std::to_string(t0) +
                           ", t1=" + std::to_string(t1));
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::sn_simple: return "sn_simple";
        case Method::sn_full: return "sn_full";
        case Method::cusum_lrv: return "r_lrv";
    }
    return "unknown";
}

double statistic_simple(const PartialSumGrid& grid) {
    const BlockConfig& cfg = grid.config();
    const std::size_t knots = cfg.knot_count();
    if (knots < 2)
        throw ConfigurationError("simple statistic needs at least two t-knots, floor(n/ell) = " +
                                 std::to_string(knots));

    const double numerator = sup_abs(grid.full_profile());

    const std::size_t ell = cfg.block_count;
    const double last = grid.at_counts(knots * ell, cfg.n);
    // k = 0 is skipped: S~ vanishes there and t_n(0) < 0 would only add a
    // discretization artifact.
    double denominator = 0.0;
    for (std::size_t k = 1; k <= knots; ++k) {
        const double bridge = grid.at_counts(k * ell, cfg.n) - rescaled_knot(k, cfg) * last;
        denominator = std::max(denominator, std::abs(bridge));
    }
    if (denominator == 0.0)
        throw DegenerateStatistic("simple statistic: bridge denominator is zero");
    return numerator / denominator;
}

double statistic_simple(const SeriesView& series, const BlockConfig& cfg) {
    return statistic_simple(PartialSumGrid(series, cfg));
}

KnotPair knot_pair(const BlockConfig& cfg, double t0, double t1) {
    if (!(t0 > 0.0 && t0 < t1 && t1 < 1.0))
        throw InvalidInput("need 0 < t0 < t1 < 1");
    KnotPair kp;
    kp.k0 = grid_count(t0, cfg.n) / cfg.block_count;
    kp.k1 = grid_count(t1, cfg.n) / cfg.block_count;
    kp.last = cfg.knot_count();
    if (!(kp.last > kp.k1 && kp.k1 > kp.k0 && kp.k0 >= 1))
        throw ConfigurationError("t0/t1 knots collide for n=" + std::to_string(cfg.n) +
                                 ", b=" + std::to_string(cfg.block_length) + ": k0=" +
                                 std::to_string(kp.k0) + ", k1=" + std::to_string(kp.k1) +
                                 ", K=" + std::to_string(kp.last));
    return kp;
}

std::vector<double> centered_integral(const std::vector<double>& profile) {
    if (profile.empty()) return {};
    const std::size_t n = profile.size() - 1;
    std::vector<double> out(profile.size(), 0.0);
    double running = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        running += profile[j];
        // sum_{i<=j} (i/j) p[j] = p[j] (j + 1) / 2
        out[j] = (running - profile[j] * (static_cast<double>(j) + 1.0) / 2.0) /
                 static_cast<double>(n);
    }
    return out;
}

std::vector<double> numerator_process(const PartialSumGrid& grid, double t0) {
    if (!(t0 > 0.0 && t0 < 1.0)) throw InvalidInput("t0 must lie in (0, 1)");
    auto v = centered_integral(grid.knot_profile(grid.knot_of(t0)));
    const double root_n = std::sqrt(static_cast<double>(grid.size()));
    for (double& x : v) x *= root_n;
    return v;
}

std::vector<double> contrast_process(const PartialSumGrid& grid, double t0, double t1) {
    const KnotPair kp = knot_pair(grid.config(), t0, t1);
    const auto lower = grid.knot_profile(kp.k0);
    const auto upper = grid.knot_profile(kp.k1);
    const auto total = grid.knot_profile(kp.last);
    const double ratio = static_cast<double>(kp.k1 - kp.k0) /
                         static_cast<double>(kp.last - kp.k0);
    const double root_n = std::sqrt(static_cast<double>(grid.size()));
    std::vector<double> out(lower.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = root_n * (upper[j] - lower[j] - ratio * (total[j] - lower[j]));
    return out;
}

std::vector<double> denominator_process(const PartialSumGrid& grid, double t0, double t1) {
    return centered_integral(contrast_process(grid, t0, t1));
}

std::vector<double> numerator_process(const SeriesView& series, const BlockConfig& cfg,
                                      double t0) {
    return numerator_process(PartialSumGrid(series, cfg), t0);
}

std::vector<double> contrast_process(const SeriesView& series, const BlockConfig& cfg, double t0,
                                     double t1) {
    return contrast_process(PartialSumGrid(series, cfg), t0, t1);
}

std::vector<double> denominator_process(const SeriesView& series, const BlockConfig& cfg,
                                        double t0, double t1) {
    return denominator_process(PartialSumGrid(series, cfg), t0, t1);
}

double statistic_full(const PartialSumGrid& grid, double t0, double t1) {
    const double denominator = sup_abs(denominator_process(grid, t0, t1));
    const double numerator = sup_abs(numerator_process(grid, t0));
    if (denominator == 0.0)
        throw DegenerateStatistic("full statistic: contrast denominator is zero");
    return numerator / denominator;
}

double statistic_full(const SeriesView& series, const BlockConfig& cfg, double t0, double t1) {
    return statistic_full(PartialSumGrid(series, cfg), t0, t1);
}

double threshold_factor(double t0, double t1) {
    if (!(t0 > 0.0 && t0 < t1 && t1 < 1.0)) throw InvalidInput("need 0 < t0 < t1 < 1");
    return std::sqrt(t0 * (1.0 - t0) / ((1.0 - t1) * (t1 - t0)));
}

TestOutcome decide_simple(double statistic, double alpha, const NullSample& null) {
    check_alpha(alpha);
    if (null.kind() != NullKind::simple_ratio)
        throw ConfigurationError("simple test needs a simple-ratio null sample");
    TestOutcome out;
    out.method = Method::sn_simple;
    out.statistic = statistic;
    out.alpha = alpha;
    out.quantile = quantile(null, 1.0 - alpha);
    out.factor = 1.0;
    out.threshold = out.quantile;
    out.reject = statistic > out.threshold;
    out.p_value = p_value(null, statistic);
    return out;
}

TestOutcome decide_simple(const SeriesView& series, const BlockConfig& cfg, double alpha,
                          const NullSample& null) {
    return decide_simple(statistic_simple(series, cfg), alpha, null);
}

TestOutcome decide_full(double statistic, const TestParams& params, const NullSample& null) {
    params.validate();
    if (null.kind() != NullKind::full_ratio)
        throw ConfigurationError("full test needs a full-ratio null sample");
    TestOutcome out;
    out.method = Method::sn_full;
    out.statistic = statistic;
    out.alpha = params.alpha;
    out.t0 = params.t0;
    out.t1 = params.t1;
    out.factor = threshold_factor(params.t0, params.t1);
    out.quantile = quantile(null, 1.0 - params.alpha);
    out.threshold = out.factor * out.quantile;
    out.reject = statistic > out.threshold;
    out.p_value = p_value(null, statistic / out.factor);
    return out;
}

TestOutcome decide_full(const SeriesView& series, const BlockConfig& cfg, const TestParams& params,
                        const NullSample& null) {
    params.validate();
    return decide_full(statistic_full(series, cfg, params.t0, params.t1), params, null);
}

std::size_t default_lrv_window(std::size_t n) {
    auto m = static_cast<std::size_t>(std::cbrt(static_cast<double>(n)));
    while ((m + 1) * (m + 1) * (m + 1) <= n) ++m;
    while (m > 0 && m * m * m > n) --m;
    return std::max<std::size_t>(m, 1);
}

double lrv_estimate(const SeriesView& series, std::optional<std::size_t> window) {
    const std::size_t n = series.size();
    const std::size_t m = window ? *window : default_lrv_window(n);
    if (m < 1) throw InvalidInput("long-run variance window must be positive");
    if (n < 2 * m)
        throw InvalidInput("long-run variance needs n >= 2m, got n=" + std::to_string(n) +
                           ", m=" + std::to_string(m));
    const std::size_t positions = n - 2 * m + 1;
    double total = 0.0;
    // Direct window sums keep the estimate exactly zero for constant input.
    for (std::size_t i = 0; i < positions; ++i) {
        double front = 0.0;
        double back = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            front += series[i + j];
            back += series[i + m + j];
        }
        const double d = front - back;
        total += d * d / (2.0 * static_cast<double>(m));
    }
    return total / static_cast<double>(positions);
}

double cusum_statistic(const SeriesView& series) {
    const std::size_t n = series.size();
    double total = 0.0;
    for (double x : series.values()) total += x;
    double running = 0.0;
    double sup = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        running += series[j - 1];
        const double dev = running - static_cast<double>(j) / static_cast<double>(n) * total;
        sup = std::max(sup, std::abs(dev));
    }
    return sup / std::sqrt(static_cast<double>(n));
}

TestOutcome cusum_lrv_test(const SeriesView& series, double alpha) {
    check_alpha(alpha);
    const double sigma = std::sqrt(lrv_estimate(series));
    if (sigma == 0.0)
        throw DegenerateStatistic("CUSUM test: estimated long-run variance is zero");
    TestOutcome out;
    out.method = Method::cusum_lrv;
    out.alpha = alpha;
    out.statistic = cusum_statistic(series);
    out.quantile = kolmogorov_quantile(1.0 - alpha);
    out.factor = sigma;
    out.threshold = sigma * out.quantile;
    out.reject = out.statistic > out.threshold;
    out.p_value = 1.0 - kolmogorov_cdf(out.statistic / sigma);
    return out;
}

}  // namespace sncusum
