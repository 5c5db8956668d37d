#include "sncusum/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sncusum/errors.hpp"
#include "sncusum/parallel.hpp"
#include "sncusum/rng.hpp"

namespace sncusum {

namespace {

std::vector<double> mean_breakpoints(MeanId id) {
    switch (id) {
        case MeanId::mu1:
        case MeanId::mu4: return {0.25};
        case MeanId::mu2:
        case MeanId::mu5: return {0.25, 0.75};
        case MeanId::mu3:
        case MeanId::mu6: return {0.5};
        case MeanId::mu0: return {};
    }
    return {};
}

double upper_step_integral(double a, double b) {
    // int_a^b 1(x > 1/2) dx for a <= b
    return std::max(0.0, b - std::max(a, 0.5));
}

OracleReport make_report(std::string name, double deviation, double tolerance) {
    OracleReport r;
    r.name = std::move(name);
    r.deviation = deviation;
    r.tolerance = tolerance;
    r.pass = deviation <= tolerance;
    return r;
}

double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

nlohmann::ordered_json to_json(const OracleReport& report) {
    nlohmann::ordered_json j;
    j["name"] = report.name;
    j["deviation"] = report.deviation;
    j["tolerance"] = report.tolerance;
    j["pass"] = report.pass;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.parameters) params[k] = v;
    j["parameters"] = params;
    return j;
}

OracleReport report_from_json(const nlohmann::json& j) {
    OracleReport r;
    r.name = j.at("name").get<std::string>();
    r.deviation = j.at("deviation").get<double>();
    r.tolerance = j.at("tolerance").get<double>();
    r.pass = j.at("pass").get<bool>();
    if (j.contains("parameters"))
        for (const auto& [k, v] : j.at("parameters").items()) r.parameters[k] = v.get<double>();
    return r;
}

double brute_force_partial_sum(const SeriesView& series, const BlockConfig& cfg, double t,
                               double s) {
    const std::size_t n = cfg.n;
    if (series.size() != n) throw InvalidInput("series length does not match configuration");
    const std::size_t t_count = grid_count(t, n);
    const std::size_t s_count = grid_count(s, n);
    double sum = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t target = permute_index(i, cfg);
        if (i <= t_count && target <= s_count) sum += series[target - 1];
    }
    return sum / static_cast<double>(n);
}

double integrate(const RealFunction& f, double a, double b,
                 const std::vector<double>& breakpoints) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, breakpoints);
    std::vector<double> cuts{a};
    for (double p : breakpoints)
        if (p > a && p < b) cuts.push_back(p);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        // Evaluate strictly inside each piece so one-sided limits are used at jumps.
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double x) { return f(x); }, cuts[i], cuts[i + 1], 15, 1e-12);
    }
    return total;
}

double mean_integral(MeanId id, double a, double b) {
    if (a > b) return -mean_integral(id, b, a);
    switch (id) {
        case MeanId::mu0: return 0.0;
        case MeanId::mu3: return upper_step_integral(a, b);
        case MeanId::mu6: return (b - a) - upper_step_integral(a, b);
        default: break;
    }
    return integrate([id](double x) { return mean_value(id, x); }, a, b, mean_breakpoints(id));
}

double variance_integral(VarianceId id, double upper) {
    return integrate(
        [id](double x) {
            const double s = sigma_value(id, x);
            return s * s;
        },
        0.0, upper, {0.5});
}

double expected_partial_sum_formula(const RealFunction& mu, const BlockConfig& cfg, double t,
                                    double s, ExpectationForm form,
                                    const std::vector<double>& breakpoints) {
    const std::size_t n = cfg.n;
    const std::size_t t_count = grid_count(t, n);
    const std::size_t rows = t_count / cfg.block_count;
    const std::size_t partial = t_count - rows * cfg.block_count;
    const double b = static_cast<double>(cfg.block_length);
    const double edge = static_cast<double>(partial) * b / static_cast<double>(n);

    const double whole = integrate(mu, 0.0, s, breakpoints);
    const double lead = static_cast<double>(rows) / b * whole;
    if (form == ExpectationForm::as_printed) return lead - integrate(mu, edge, s, breakpoints) / b;
    return lead + integrate(mu, 0.0, std::min(edge, s), breakpoints) / b;
}

double expected_partial_sum_formula(MeanId id, const BlockConfig& cfg, double t, double s,
                                    ExpectationForm form) {
    return expected_partial_sum_formula([id](double x) { return mean_value(id, x); }, cfg, t, s,
                                        form, mean_breakpoints(id));
}

OracleReport check_oracle_equivalence(std::size_t cases, std::size_t max_n, std::uint64_t seed,
                                      double tolerance) {
    if (max_n < 4) throw InvalidInput("oracle check needs max_n >= 4");
    Engine engine = stream_engine(seed, 0);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    double worst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(4, max_n)(engine);
        const std::size_t b = std::uniform_int_distribution<std::size_t>(1, n)(engine);
        std::vector<double> x(n);
        for (auto& v : x) v = normal(engine);
        const SeriesView series(x);
        const BlockConfig cfg = make_block_config(n, b);
        // Mix lattice points (exact knots) with arbitrary coordinates.
        auto coordinate = [&] {
            if (unit(engine) < 0.3) {
                const auto j = std::uniform_int_distribution<std::size_t>(0, n)(engine);
                return static_cast<double>(j) / static_cast<double>(n);
            }
            return unit(engine);
        };
        const double t = coordinate();
        const double s = coordinate();
        const double fast = PartialSumGrid(series, cfg).partial_sum(t, s);
        const double slow = brute_force_partial_sum(series, cfg, t, s);
        worst = std::max(worst, std::abs(fast - slow));
    }
    OracleReport r = make_report("oracle_equivalence", worst, tolerance);
    r.parameters = {{"cases", static_cast<double>(cases)},
                    {"max_n", static_cast<double>(max_n)},
                    {"seed", static_cast<double>(seed)}};
    return r;
}

OracleReport check_expectation_formula(const std::string& label, const RealFunction& mu,
                                       const std::vector<double>& breakpoints, std::size_t n,
                                       std::size_t grid_points, double tolerance_factor,
                                       ExpectationForm form) {
    if (grid_points < 2) throw InvalidInput("expectation check needs at least 2 grid points");
    const BlockConfig cfg = make_block_config(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = mu(static_cast<double>(i + 1) / static_cast<double>(n));
    const SeriesView series(x);
    const PartialSumGrid grid(series, cfg);

    double worst = 0.0;
    for (std::size_t a = 0; a < grid_points; ++a) {
        const double t = static_cast<double>(a) / static_cast<double>(grid_points - 1);
        for (std::size_t c = 0; c < grid_points; ++c) {
            const double s = static_cast<double>(c) / static_cast<double>(grid_points - 1);
            const double formula = expected_partial_sum_formula(mu, cfg, t, s, form, breakpoints);
            worst = std::max(worst, std::abs(grid.partial_sum(t, s) - formula));
        }
    }
    const double scale = static_cast<double>(cfg.block_length) / static_cast<double>(n);
    OracleReport r = make_report("expectation_formula_" + label, worst, tolerance_factor * scale);
    r.parameters = {{"n", static_cast<double>(n)},
                    {"b", static_cast<double>(cfg.block_length)},
                    {"grid_points", static_cast<double>(grid_points)},
                    {"tolerance_factor", tolerance_factor}};
    return r;
}

OracleReport check_fclt_variance(VarianceId id, std::size_t n, std::size_t replications,
                                 std::uint64_t seed, double relative_tolerance,
                                 std::size_t workers) {
    if (replications < 2) throw InvalidInput("variance check needs at least 2 replications");
    Scenario sc;
    sc.mean = MeanId::mu0;
    sc.variance = id;
    sc.c_sigma = 1.0;
    sc.error = ErrorModel::iid;
    sc.n = n;
    sc.replications = replications;
    sc.seed = seed;
    const BlockConfig cfg = make_block_config(n);
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<double> values(replications);
    parallel_for(replications, workers, [&](std::size_t rep) {
        const auto x = gen_series(sc, rep);
        values[rep] = root_n * PartialSumGrid(SeriesView(x), cfg).partial_sum(1.0, 1.0);
    });
    const double target = variance_integral(id);
    const double var = sample_variance(values);
    OracleReport r = make_report("fclt_variance_" + std::string(to_string(id)),
                                 std::abs(var / target - 1.0), relative_tolerance);
    r.parameters = {{"n", static_cast<double>(n)},
                    {"replications", static_cast<double>(replications)},
                    {"target", target},
                    {"sample_variance", var}};
    return r;
}

OracleReport check_fclt_covariance(VarianceId id, std::size_t n, std::size_t replications,
                                   std::uint64_t seed, double t1, double s1, double t2, double s2,
                                   double tolerance, std::size_t workers) {
    if (replications < 2) throw InvalidInput("covariance check needs at least 2 replications");
    Scenario sc;
    sc.mean = MeanId::mu0;
    sc.variance = id;
    sc.n = n;
    sc.replications = replications;
    sc.seed = seed;
    const BlockConfig cfg = make_block_config(n);
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<double> first(replications);
    std::vector<double> second(replications);
    parallel_for(replications, workers, [&](std::size_t rep) {
        const auto x = gen_series(sc, rep);
        const PartialSumGrid grid(SeriesView(x), cfg);
        first[rep] = root_n * grid.partial_sum(t1, s1);
        second[rep] = root_n * grid.partial_sum(t2, s2);
    });
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < replications; ++i) {
        m1 += first[i];
        m2 += second[i];
    }
    m1 /= static_cast<double>(replications);
    m2 /= static_cast<double>(replications);
    double cov = 0.0;
    for (std::size_t i = 0; i < replications; ++i) cov += (first[i] - m1) * (second[i] - m2);
    cov /= static_cast<double>(replications - 1);

    const double target = std::min(t1, t2) * variance_integral(id, std::min(s1, s2));
    const double scale =
        std::sqrt(t1 * variance_integral(id, s1) * t2 * variance_integral(id, s2));
    OracleReport r = make_report("fclt_covariance_" + std::string(to_string(id)),
                                 std::abs(cov - target) / scale, tolerance);
    r.parameters = {{"n", static_cast<double>(n)},
                    {"replications", static_cast<double>(replications)},
                    {"t1", t1},
                    {"s1", s1},
                    {"t2", t2},
                    {"s2", s2},
                    {"target", target},
                    {"sample_covariance", cov}};
    return r;
}

std::vector<OracleReport> run_validation_suite(const ValidationOptions& options) {
    const double k = options.tolerance_scale;
    std::vector<OracleReport> out;
    out.push_back(check_oracle_equivalence(1000, 200, options.seed, 1e-12 * k));

    const RealFunction identity = [](double x) { return x; };
    const RealFunction zero = [](double) { return 0.0; };
    const RealFunction step = [](double x) { return mean_value(MeanId::mu3, x); };
    for (std::size_t n : {200, 2000}) {
        out.push_back(check_expectation_formula("mu0", zero, {}, n, 50, 5.0 * k));
        out.push_back(check_expectation_formula("mu3", step, {0.5}, n, 50, 5.0 * k));
        out.push_back(check_expectation_formula("identity", identity, {}, n, 50, 5.0 * k));
    }

    for (auto id : {VarianceId::sigma0, VarianceId::sigma1, VarianceId::sigma2})
        out.push_back(check_fclt_variance(id, 2000, 5000, options.seed + 1, 0.10 * k,
                                          options.workers));

    if (options.extended) {
        struct Pair {
            double t1, s1, t2, s2;
        };
        for (const Pair& p : {Pair{0.5, 0.5, 0.5, 0.5}, Pair{0.5, 1.0, 1.0, 0.5},
                              Pair{0.3, 0.7, 0.8, 0.4}, Pair{1.0, 1.0, 0.25, 0.9}})
            out.push_back(check_fclt_covariance(VarianceId::sigma2, 2000, 5000, options.seed + 2,
                                                p.t1, p.s1, p.t2, p.s2, 0.10 * k,
                                                options.workers));
    }
    return out;
}

}  // namespace sncusum
