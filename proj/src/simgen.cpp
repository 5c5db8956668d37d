#include "sncusum/simgen.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <span>

#include "sncusum/block_process.hpp"
#include "sncusum/change_tests.hpp"
#include "sncusum/errors.hpp"
#include "sncusum/parallel.hpp"
#include "sncusum/rng.hpp"

namespace sncusum {

namespace {

constexpr double pi = std::numbers::pi;

// AR coefficients for the two readings of the autoregressive error model.
constexpr double ar_phi = 0.5;
const double ar_innovation_sd = std::sqrt(3.0) / 2.0;
const double ar_literal_phi = std::sqrt(3.0) / 4.0;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Accepts "<prefix><k>" or "<k>" with k in [0, count).
int parse_indexed(std::string_view text, std::string_view prefix, int count,
                  std::string_view what) {
    std::string_view digits = text;
    if (digits.substr(0, prefix.size()) == prefix) digits.remove_prefix(prefix.size());
    int k = -1;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || k < 0 || k >= count)
        throw InvalidInput("unknown " + std::string(what) + " '" + std::string(text) + "'");
    return k;
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format_rate(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.6f", v);
    return buf.data();
}

void fill_errors(ErrorModel model, std::span<double> out, Engine& engine) {
    std::normal_distribution<double> normal;
    const std::size_t n = out.size();
    switch (model) {
        case ErrorModel::iid:
            for (auto& e : out) e = normal(engine);
            return;
        case ErrorModel::ma: {
            const double scale = 2.0 / std::sqrt(5.0);
            double previous = normal(engine);  // eta_0
            for (std::size_t i = 0; i < n; ++i) {
                const double eta = normal(engine);
                out[i] = scale * (eta + 0.5 * previous);
                previous = eta;
            }
            return;
        }
        case ErrorModel::ar: {
            // eps_0 from the stationary N(0, 1) law: no burn-in needed.
            double previous = normal(engine);
            for (std::size_t i = 0; i < n; ++i) {
                previous = ar_phi * previous + ar_innovation_sd * normal(engine);
                out[i] = previous;
            }
            return;
        }
        case ErrorModel::ar_literal: {
            double previous = std::sqrt(error_variance(model)) * normal(engine);
            for (std::size_t i = 0; i < n; ++i) {
                previous = ar_innovation_sd * (normal(engine) + 0.5 * previous);
                out[i] = previous;
            }
            return;
        }
    }
}

}  // namespace

std::string_view to_string(MeanId id) {
    static constexpr std::array<std::string_view, 7> names{"mu0", "mu1", "mu2", "mu3",
                                                           "mu4", "mu5", "mu6"};
    return names[static_cast<std::size_t>(id)];
}

std::string_view to_string(VarianceId id) {
    static constexpr std::array<std::string_view, 4> names{"sigma0", "sigma1", "sigma2",
                                                           "sigma3"};
    return names[static_cast<std::size_t>(id)];
}

std::string_view to_string(ErrorModel m) {
    switch (m) {
        case ErrorModel::iid: return "iid";
        case ErrorModel::ma: return "ma";
        case ErrorModel::ar: return "ar";
        case ErrorModel::ar_literal: return "ar-literal";
    }
    return "unknown";
}

MeanId parse_mean_id(std::string_view text) {
    return static_cast<MeanId>(parse_indexed(text, "mu", 7, "mean function"));
}

VarianceId parse_variance_id(std::string_view text) {
    return static_cast<VarianceId>(parse_indexed(text, "sigma", 4, "variance function"));
}

ErrorModel parse_error_model(std::string_view text) {
    for (auto m : {ErrorModel::iid, ErrorModel::ma, ErrorModel::ar, ErrorModel::ar_literal})
        if (text == to_string(m)) return m;
    throw InvalidInput("unknown error model '" + std::string(text) + "'");
}

double mean_value(MeanId id, double x) {
    switch (id) {
        case MeanId::mu0: return 0.0;
        case MeanId::mu1: {
            const double shifted = x - 0.25;
            return std::sin(8.0 * pi * x) + (x > 0.25 ? 2.0 * shifted * shifted : 0.0);
        }
        case MeanId::mu2:
            if (x <= 0.25) return -1.0;
            if (x <= 0.75) return -(1.5 * std::sin(2.0 * pi * x) + 0.5);
            return 2.0;
        case MeanId::mu3: return x > 0.5 ? 1.0 : 0.0;
        case MeanId::mu4: return 0.5 - mean_value(MeanId::mu1, x);
        case MeanId::mu5: return 1.5 - mean_value(MeanId::mu2, x);
        case MeanId::mu6: return 1.0 - mean_value(MeanId::mu3, x);
    }
    return 0.0;
}

double sigma_value(VarianceId id, double x) {
    switch (id) {
        case VarianceId::sigma0: return 1.0;
        case VarianceId::sigma1: return 0.5 + x;
        case VarianceId::sigma2: return 1.0 - 0.5 * std::cos(2.0 * pi * x);
        case VarianceId::sigma3: return 0.5 + (x > 0.5 ? 1.0 : 0.0);
    }
    return 1.0;
}

double error_variance(ErrorModel m) {
    if (m == ErrorModel::ar_literal)
        return 0.75 / (1.0 - ar_literal_phi * ar_literal_phi);  // 12/13
    return 1.0;
}

double error_autocovariance(ErrorModel m, std::size_t lag) {
    switch (m) {
        case ErrorModel::iid: return lag == 0 ? 1.0 : 0.0;
        case ErrorModel::ma:
            if (lag == 0) return 1.0;
            return lag == 1 ? 0.4 : 0.0;
        case ErrorModel::ar: return std::pow(ar_phi, static_cast<double>(lag));
        case ErrorModel::ar_literal:
            return error_variance(m) * std::pow(ar_literal_phi, static_cast<double>(lag));
    }
    return 0.0;
}

double error_long_run_variance(ErrorModel m) {
    switch (m) {
        case ErrorModel::iid: return 1.0;
        case ErrorModel::ma: return 0.8 * 1.5 * 1.5;
        case ErrorModel::ar: return 0.75 / ((1.0 - ar_phi) * (1.0 - ar_phi));
        case ErrorModel::ar_literal:
            return 0.75 / ((1.0 - ar_literal_phi) * (1.0 - ar_literal_phi));
    }
    return 1.0;
}

std::vector<double> gen_errors(ErrorModel model, std::size_t n, std::uint64_t seed) {
    std::vector<double> out(n);
    Engine engine = stream_engine(seed, 0);
    fill_errors(model, out, engine);
    return out;
}

std::string_view to_string(TestId id) {
    switch (id) {
        case TestId::r_lrv: return "r_lrv";
        case TestId::sn_simple: return "sn_simple";
        case TestId::sn_full_v1: return "sn_full_v1";
        case TestId::sn_full_v2: return "sn_full_v2";
    }
    return "unknown";
}

TestId parse_test_id(std::string_view text) {
    for (auto t : all_tests)
        if (text == to_string(t)) return t;
    throw InvalidInput("unknown test '" + std::string(text) + "'");
}

void Scenario::validate() const {
    if (replications < 1) throw InvalidInput("scenario needs at least one replication");
    if (!(c_sigma > 0.0)) throw InvalidInput("c_sigma must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
    if (n < SeriesView::min_length) throw InvalidInput("scenario sample size below 4");
}

std::vector<double> gen_series(const Scenario& scenario, std::size_t index) {
    const std::size_t n = scenario.n;
    std::vector<double> x(n);
    Engine engine = stream_engine(scenario.seed, index);
    fill_errors(scenario.error, x, engine);
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i + 1) / dn;
        x[i] = mean_value(scenario.mean, u) +
               scenario.c_sigma * sigma_value(scenario.variance, u) * x[i];
    }
    return x;
}

const TestTally& ScenarioResult::tally(TestId id) const {
    for (std::size_t i = 0; i < tests.size(); ++i)
        if (tests[i] == id) return tallies[i];
    throw InvalidInput("test '" + std::string(to_string(id)) + "' was not run");
}

double ScenarioResult::rate(TestId id) const {
    return static_cast<double>(tally(id).rejections) /
           static_cast<double>(scenario.replications);
}

ScenarioResult run_scenario(const Scenario& scenario, const std::vector<TestId>& tests,
                            const NullSet& nulls, std::size_t workers) {
    scenario.validate();
    const auto started = std::chrono::steady_clock::now();
    const BlockConfig cfg = make_block_config(scenario.n, scenario.block_override);

    std::vector<TestParams> params(tests.size());
    for (std::size_t k = 0; k < tests.size(); ++k) {
        switch (tests[k]) {
            case TestId::sn_simple:
                if (!nulls.simple)
                    throw ConfigurationError("sn_simple requested without a simple-ratio null sample");
                if (cfg.knot_count() < 2)
                    throw ConfigurationError("sn_simple needs at least two t-knots");
                break;
            case TestId::sn_full_v1:
            case TestId::sn_full_v2:
                if (!nulls.full)
                    throw ConfigurationError("sn_full requested without a full-ratio null sample");
                params[k] = TestParams::for_variant(
                    tests[k] == TestId::sn_full_v1 ? Variant::v1 : Variant::v2, scenario.alpha);
                knot_pair(cfg, params[k].t0, params[k].t1);
                break;
            case TestId::r_lrv:
                break;
        }
    }

    // Per replication and test: 0 = accept, 1 = reject, 2 = degenerate.
    const std::size_t width = tests.size();
    std::vector<unsigned char> outcome(scenario.replications * width, 0);
    parallel_for(scenario.replications, workers, [&](std::size_t rep) {
        const auto x = gen_series(scenario, rep);
        const SeriesView series(x);
        const PartialSumGrid grid(series, cfg);
        for (std::size_t k = 0; k < width; ++k) {
            unsigned char code = 0;
            try {
                switch (tests[k]) {
                    case TestId::r_lrv:
                        code = cusum_lrv_test(series, scenario.alpha).reject;
                        break;
                    case TestId::sn_simple:
                        code = decide_simple(statistic_simple(grid), scenario.alpha, *nulls.simple)
                                   .reject;
                        break;
                    case TestId::sn_full_v1:
                    case TestId::sn_full_v2:
                        code = decide_full(statistic_full(grid, params[k].t0, params[k].t1),
                                           params[k], *nulls.full)
                                   .reject;
                        break;
                }
            } catch (const DegenerateStatistic&) {
                code = 2;
            }
            outcome[rep * width + k] = code;
        }
    });

    ScenarioResult result;
    result.scenario = scenario;
    result.tests = tests;
    result.tallies.assign(width, {});
    for (std::size_t rep = 0; rep < scenario.replications; ++rep)
        for (std::size_t k = 0; k < width; ++k) {
            const auto code = outcome[rep * width + k];
            if (code == 1) ++result.tallies[k].rejections;
            if (code == 2) ++result.tallies[k].degenerate;
        }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::vector<ScenarioResult> run_grid(const std::vector<Scenario>& scenarios,
                                     const std::vector<TestId>& tests, const NullSet& nulls,
                                     std::size_t workers) {
    std::vector<ScenarioResult> out;
    out.reserve(scenarios.size());
    for (const auto& s : scenarios) out.push_back(run_scenario(s, tests, nulls, workers));
    return out;
}

std::string_view to_string(GridDimension d) {
    switch (d) {
        case GridDimension::mean: return "mu";
        case GridDimension::variance: return "sigma";
        case GridDimension::c_sigma: return "c_sigma";
        case GridDimension::error: return "eps";
    }
    return "unknown";
}

std::vector<AggregateRow> aggregate(const std::vector<ScenarioResult>& results,
                                    GridDimension keep) {
    if (results.empty()) return {};
    const auto& tests = results.front().tests;
    struct Acc {
        std::string label;
        std::size_t cells = 0;
        std::size_t replications = 0;
        std::vector<std::size_t> rejections;
    };
    // Keyed by (n, ordering value of the kept level).
    std::map<std::pair<std::size_t, double>, Acc> groups;
    for (const auto& r : results) {
        if (r.tests != tests)
            throw InvalidInput("cannot aggregate results that ran different tests");
        const Scenario& s = r.scenario;
        double order = 0.0;
        std::string label;
        switch (keep) {
            case GridDimension::mean:
                order = static_cast<double>(s.mean);
                label = to_string(s.mean);
                break;
            case GridDimension::variance:
                order = static_cast<double>(s.variance);
                label = to_string(s.variance);
                break;
            case GridDimension::c_sigma:
                order = s.c_sigma;
                label = format_number(s.c_sigma);
                break;
            case GridDimension::error:
                order = static_cast<double>(s.error);
                label = to_string(s.error);
                break;
        }
        Acc& acc = groups[{s.n, order}];
        acc.label = label;
        acc.cells += 1;
        acc.replications += s.replications;
        acc.rejections.resize(tests.size(), 0);
        for (std::size_t k = 0; k < tests.size(); ++k)
            acc.rejections[k] += r.tallies[k].rejections;
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, acc] : groups) {
        AggregateRow row;
        row.n = key.first;
        row.level = acc.label;
        row.cells = acc.cells;
        row.replications = acc.replications;
        for (auto rej : acc.rejections)
            row.rates.push_back(static_cast<double>(rej) / static_cast<double>(acc.replications));
        rows.push_back(std::move(row));
    }
    return rows;
}

GridSpec parse_grid_spec(std::string_view text) {
    const std::string spec = trim(text);
    if (spec == "null" || spec == "alternative") {
        GridSpec g;
        g.means = spec == "null" ? std::vector<MeanId>{MeanId::mu0}
                                 : std::vector<MeanId>{MeanId::mu1, MeanId::mu2, MeanId::mu3,
                                                       MeanId::mu4, MeanId::mu5, MeanId::mu6};
        g.variances = {VarianceId::sigma0, VarianceId::sigma1, VarianceId::sigma2,
                       VarianceId::sigma3};
        g.c_sigmas = {0.25, 0.5, 1.0};
        g.errors = {ErrorModel::iid, ErrorModel::ma, ErrorModel::ar};
        g.sizes = {100, 200, 500, 1000};
        return g;
    }
    if (spec == "smoke") {
        GridSpec g;
        g.sizes = {200};
        return g;
    }

    GridSpec g;
    if (spec.empty()) return g;
    for (const auto& clause : split(spec, ';')) {
        if (clause.empty()) continue;
        const auto eq = clause.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("grid clause '" + clause + "' is not key=values");
        const std::string key = trim(std::string_view(clause).substr(0, eq));
        const auto values = split(std::string_view(clause).substr(eq + 1), ',');
        if (values.empty() || (values.size() == 1 && values[0].empty()))
            throw InvalidInput("grid clause '" + clause + "' has no values");
        if (key == "mu") {
            g.means.clear();
            for (const auto& v : values) g.means.push_back(parse_mean_id(v));
        } else if (key == "sigma") {
            g.variances.clear();
            for (const auto& v : values) g.variances.push_back(parse_variance_id(v));
        } else if (key == "c") {
            g.c_sigmas.clear();
            for (const auto& v : values) {
                double c = 0.0;
                auto res = std::from_chars(v.data(), v.data() + v.size(), c);
                if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !(c > 0.0))
                    throw InvalidInput("bad c_sigma '" + v + "'");
                g.c_sigmas.push_back(c);
            }
        } else if (key == "eps") {
            g.errors.clear();
            for (const auto& v : values) g.errors.push_back(parse_error_model(v));
        } else if (key == "n") {
            g.sizes.clear();
            for (const auto& v : values) {
                std::size_t n = 0;
                auto res = std::from_chars(v.data(), v.data() + v.size(), n);
                if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || n < 4)
                    throw InvalidInput("bad sample size '" + v + "'");
                g.sizes.push_back(n);
            }
        } else {
            throw InvalidInput("unknown grid key '" + key + "'");
        }
    }
    return g;
}

std::vector<Scenario> expand_grid(const GridSpec& spec, std::size_t replications, double alpha,
                                  std::uint64_t seed) {
    std::vector<Scenario> out;
    for (auto n : spec.sizes)
        for (auto mu : spec.means)
            for (auto sigma : spec.variances)
                for (auto c : spec.c_sigmas)
                    for (auto eps : spec.errors) {
                        Scenario s;
                        s.mean = mu;
                        s.variance = sigma;
                        s.c_sigma = c;
                        s.error = eps;
                        s.n = n;
                        s.replications = replications;
                        s.alpha = alpha;
                        s.seed = seed;
                        s.validate();
                        out.push_back(s);
                    }
    return out;
}

void write_cells_csv(std::ostream& out, const std::vector<ScenarioResult>& results,
                     const std::vector<TestId>& tests) {
    out << "n,mu,sigma,c_sigma,eps,replications";
    for (auto t : tests) out << ',' << to_string(t);
    for (auto t : tests) out << ',' << to_string(t) << "_degenerate";
    out << '\n';
    for (const auto& r : results) {
        const Scenario& s = r.scenario;
        out << s.n << ',' << to_string(s.mean) << ',' << to_string(s.variance) << ','
            << format_number(s.c_sigma) << ',' << to_string(s.error) << ',' << s.replications;
        for (auto t : tests) out << ',' << format_rate(r.rate(t));
        for (auto t : tests) out << ',' << r.tally(t).degenerate;
        out << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows,
                         GridDimension keep, const std::vector<TestId>& tests) {
    out << "n," << to_string(keep) << ",cells,replications";
    for (auto t : tests) out << ',' << to_string(t);
    out << '\n';
    for (const auto& row : rows) {
        out << row.n << ',' << row.level << ',' << row.cells << ',' << row.replications;
        for (double r : row.rates) out << ',' << format_rate(r);
        out << '\n';
    }
}

}  // namespace sncusum
