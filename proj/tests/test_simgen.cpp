#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sncusum/errors.hpp"
#include "sncusum/nulldist.hpp"
#include "sncusum/simgen.hpp"

using namespace sncusum;
using Catch::Approx;

namespace {

const std::vector<MeanId> kMeans{MeanId::mu0, MeanId::mu1, MeanId::mu2, MeanId::mu3,
                                 MeanId::mu4, MeanId::mu5, MeanId::mu6};
const std::vector<VarianceId> kSigmas{VarianceId::sigma0, VarianceId::sigma1,
                                      VarianceId::sigma2, VarianceId::sigma3};

double autocov(const std::vector<double>& e, std::size_t h) {
    double acc = 0.0;
    for (std::size_t i = 0; i + h < e.size(); ++i) acc += e[i] * e[i + h];
    return acc / static_cast<double>(e.size() - h);
}

NullSet small_nulls() {
    NullSet nulls;
    nulls.simple = simulate_null(NullKind::simple_ratio, 200, 2000, 4);
    nulls.full = simulate_null(NullKind::full_ratio, 200, 2000, 4);
    return nulls;
}

}  // namespace

TEST_CASE("mean functions", "[simgen]") {
    CHECK(mean_value(MeanId::mu3, 0.25) == 0.0);
    CHECK(mean_value(MeanId::mu3, 0.75) == 1.0);
    CHECK(mean_value(MeanId::mu1, 0.0) == Approx(0.0).margin(1e-15));
    CHECK(mean_value(MeanId::mu2, 0.1) == -1.0);
    CHECK(mean_value(MeanId::mu2, 0.9) == 2.0);
    CHECK(mean_value(MeanId::mu2, 0.5) == Approx(-0.5).margin(1e-15));
    CHECK(mean_value(MeanId::mu1, 0.75) == Approx(0.5).margin(1e-12));
    for (int i = 0; i <= 10000; ++i) {
        const double x = i / 10000.0;
        REQUIRE(mean_value(MeanId::mu0, x) == 0.0);
        REQUIRE(std::abs(mean_value(MeanId::mu4, x) - (0.5 - mean_value(MeanId::mu1, x))) <= 1e-12);
        REQUIRE(std::abs(mean_value(MeanId::mu5, x) - (1.5 - mean_value(MeanId::mu2, x))) <= 1e-12);
        REQUIRE(std::abs(mean_value(MeanId::mu6, x) - (1.0 - mean_value(MeanId::mu3, x))) <= 1e-12);
    }
}

TEST_CASE("variance functions", "[simgen]") {
    for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        REQUIRE(sigma_value(VarianceId::sigma0, x) == 1.0);
        for (auto id : kSigmas) REQUIRE(sigma_value(id, x) >= 0.5 - 1e-15);
    }
    CHECK(sigma_value(VarianceId::sigma2, 0.0) == Approx(0.5));
    CHECK(sigma_value(VarianceId::sigma2, 0.5) == Approx(1.5));
    CHECK(sigma_value(VarianceId::sigma3, 0.6) == Approx(1.5));
    CHECK(sigma_value(VarianceId::sigma3, 0.4) == Approx(0.5));
    CHECK(sigma_value(VarianceId::sigma1, 0.25) == Approx(0.75));
}

TEST_CASE("identifier parsing", "[simgen]") {
    CHECK(parse_mean_id("mu3") == MeanId::mu3);
    CHECK(parse_mean_id("6") == MeanId::mu6);
    CHECK(parse_variance_id("sigma2") == VarianceId::sigma2);
    CHECK(parse_error_model("ar") == ErrorModel::ar);
    CHECK(parse_error_model("ar-literal") == ErrorModel::ar_literal);
    CHECK(parse_test_id("sn_full_v2") == TestId::sn_full_v2);
    CHECK_THROWS_AS(parse_mean_id("mu7"), InvalidInput);
    CHECK_THROWS_AS(parse_error_model("garch"), InvalidInput);
    for (auto m : kMeans) CHECK(parse_mean_id(to_string(m)) == m);
}

TEST_CASE("error models", "[simgen][slow]") {
    const std::size_t n = 1000000;
    for (auto model : {ErrorModel::iid, ErrorModel::ma, ErrorModel::ar, ErrorModel::ar_literal}) {
        const auto e = gen_errors(model, n, 123);
        REQUIRE(e.size() == n);
        double mean = 0.0;
        for (double v : e) mean += v;
        mean /= n;
        INFO("model " << to_string(model));
        CHECK(std::abs(mean) < 5.0 * std::sqrt(error_long_run_variance(model) / n));
        if (model != ErrorModel::ar_literal) CHECK(autocov(e, 0) == Approx(1.0).margin(0.01));
        for (std::size_t h : {0u, 1u, 2u}) {
            // sd of the lag-h sample autocovariance, sum over |k| of (g_k^2 + g_{k+h} g_{k-h})
            double var = 0.0;
            for (int k = -60; k <= 60; ++k) {
                const auto g = [&](long lag) { return error_autocovariance(model, std::abs(lag)); };
                var += g(k) * g(k) + g(k + long(h)) * g(k - long(h));
            }
            const double sd = std::sqrt(var / n);
            INFO("lag " << h);
            CHECK(std::abs(autocov(e, h) - error_autocovariance(model, h)) <= 5.0 * sd);
        }
    }
    CHECK(error_autocovariance(ErrorModel::ma, 1) == Approx(0.4));
    CHECK(error_long_run_variance(ErrorModel::ar) == Approx(3.0));
    CHECK(error_variance(ErrorModel::ar_literal) == Approx(12.0 / 13.0));
    CHECK(error_variance(ErrorModel::ar) == 1.0);
}

TEST_CASE("series generation", "[simgen]") {
    Scenario sc;
    sc.mean = MeanId::mu1;
    sc.variance = VarianceId::sigma2;
    sc.c_sigma = 1e-300;
    sc.n = 64;
    sc.seed = 10;
    const auto x = gen_series(sc, 3);
    for (std::size_t i = 0; i < sc.n; ++i)
        REQUIRE(x[i] == Approx(mean_value(MeanId::mu1, double(i + 1) / sc.n)).margin(1e-200));

    Scenario raw;
    raw.n = 300;
    raw.seed = 77;
    raw.error = ErrorModel::ma;
    const auto a = gen_series(raw, 5);
    CHECK(a == gen_series(raw, 5));
    CHECK(a != gen_series(raw, 6));

    raw.c_sigma = 0.5;
    raw.mean = MeanId::mu3;
    raw.variance = VarianceId::sigma3;
    const auto b = gen_series(raw, 5);
    for (std::size_t i = 0; i < raw.n; ++i) {
        const double u = double(i + 1) / raw.n;
        REQUIRE(b[i] == Approx(mean_value(MeanId::mu3, u) +
                               0.5 * sigma_value(VarianceId::sigma3, u) * a[i]));
    }

    Scenario bad;
    bad.replications = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = Scenario{};
    bad.c_sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("scenario runs", "[simgen]") {
    const NullSet nulls = small_nulls();
    Scenario sc;
    sc.n = 200;
    sc.replications = 300;
    sc.seed = 55;
    const std::vector<TestId> tests(all_tests.begin(), all_tests.end());

    const auto r1 = run_scenario(sc, tests, nulls, 1);
    const auto r4 = run_scenario(sc, tests, nulls, 4);
    for (auto t : tests) {
        CHECK(r1.tally(t).rejections == r4.tally(t).rejections);
        CHECK(r1.rate(t) >= 0.0);
        CHECK(r1.rate(t) <= 1.0);
        CHECK(r1.tally(t).degenerate == 0);
    }

    SECTION("missing null samples") {
        NullSet none;
        CHECK_THROWS_AS(run_scenario(sc, {TestId::sn_simple}, none), ConfigurationError);
        CHECK_THROWS_AS(run_scenario(sc, {TestId::sn_full_v2}, none), ConfigurationError);
        CHECK_NOTHROW(run_scenario(sc, {TestId::r_lrv}, none));
    }

    SECTION("single-cell grid equals the scenario") {
        const auto grid = run_grid({sc}, tests, nulls, 2);
        REQUIRE(grid.size() == 1);
        for (auto t : tests) CHECK(grid[0].tally(t).rejections == r1.tally(t).rejections);
    }
}

TEST_CASE("aggregation and CSV output", "[simgen]") {
    ScenarioResult a, b;
    a.scenario.n = b.scenario.n = 100;
    a.scenario.replications = 100;
    b.scenario.replications = 300;
    a.scenario.variance = VarianceId::sigma0;
    b.scenario.variance = VarianceId::sigma1;
    a.tests = b.tests = {TestId::r_lrv};
    a.tallies = {{10, 0}};
    b.tallies = {{90, 0}};
    const auto rows = aggregate({a, b}, GridDimension::mean);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].replications == 400);
    CHECK(rows[0].cells == 2);
    CHECK(rows[0].rates[0] == Approx(100.0 / 400.0));

    b.scenario.replications = 100;
    b.tallies = {{30, 0}};
    const auto equal = aggregate({a, b}, GridDimension::mean);
    CHECK(equal[0].rates[0] == Approx(0.5 * (0.1 + 0.3)));
    const auto split = aggregate({a, b}, GridDimension::variance);
    CHECK(split.size() == 2);

    std::ostringstream cells;
    write_cells_csv(cells, {a, b}, {TestId::r_lrv});
    const std::string text = cells.str();
    CHECK(text.rfind("n,mu,sigma,c_sigma,eps,replications,r_lrv", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("grid specifications", "[simgen]") {
    const auto g = parse_grid_spec("mu=0,3;sigma=0,1,2,3;c=0.25,0.5,1;eps=iid,ma,ar;n=100,200");
    CHECK(g.means.size() == 2);
    CHECK(g.variances.size() == 4);
    CHECK(g.c_sigmas.size() == 3);
    CHECK(g.errors.size() == 3);
    CHECK(g.sizes.size() == 2);
    const auto cells = expand_grid(g, 50, 0.05, 9);
    CHECK(cells.size() == 2 * 4 * 3 * 3 * 2);
    for (const auto& c : cells) {
        CHECK(c.replications == 50);
        CHECK(c.seed == 9);
    }
    CHECK(parse_grid_spec("smoke").sizes.size() == 1);
    CHECK(parse_grid_spec("null").means == std::vector<MeanId>{MeanId::mu0});
    CHECK_THROWS_AS(parse_grid_spec("mu"), InvalidInput);
    CHECK_THROWS_AS(parse_grid_spec("foo=1"), InvalidInput);
    CHECK_THROWS_AS(parse_grid_spec("n=abc"), InvalidInput);
}
