#pragma once

// Simulation model X_i = mu(i/n) + c * sigma(i/n) * eps_i and the
// replication harness that turns scenario grids into rejection-rate tables.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sncusum/nulldist.hpp"

namespace sncusum {

enum class MeanId { mu0, mu1, mu2, mu3, mu4, mu5, mu6 };
enum class VarianceId { sigma0, sigma1, sigma2, sigma3 };

// ar is eps_i = eps_{i-1}/2 + (sqrt(3)/2) eta_i (unit stationary variance);
// ar_literal is eps_i = (sqrt(3)/2)(eta_i + eps_{i-1}/2), stationary
// variance 12/13, kept for sensitivity runs.
enum class ErrorModel { iid, ma, ar, ar_literal };

std::string_view to_string(MeanId id);
std::string_view to_string(VarianceId id);
std::string_view to_string(ErrorModel m);
MeanId parse_mean_id(std::string_view text);          // "mu3" or "3"
VarianceId parse_variance_id(std::string_view text);  // "sigma2" or "2"
ErrorModel parse_error_model(std::string_view text);

double mean_value(MeanId id, double x);
double sigma_value(VarianceId id, double x);

// Stationary variance of the error model (1 except for ar_literal).
double error_variance(ErrorModel m);
// Lag-h autocovariance of the error model.
double error_autocovariance(ErrorModel m, std::size_t lag);
// Sum of all autocovariances.
double error_long_run_variance(ErrorModel m);

std::vector<double> gen_errors(ErrorModel model, std::size_t n, std::uint64_t seed);

// Tests the harness knows how to run; names are stable CSV column ids.
enum class TestId { r_lrv, sn_simple, sn_full_v1, sn_full_v2 };
inline constexpr std::array<TestId, 4> all_tests{TestId::r_lrv, TestId::sn_simple,
                                                 TestId::sn_full_v1, TestId::sn_full_v2};
std::string_view to_string(TestId id);
TestId parse_test_id(std::string_view text);

struct Scenario {
    MeanId mean = MeanId::mu0;
    VarianceId variance = VarianceId::sigma0;
    double c_sigma = 1.0;
    ErrorModel error = ErrorModel::iid;
    std::size_t n = 500;
    std::size_t replications = 5000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::optional<std::size_t> block_override;

    void validate() const;
};

// Replication `index` of the scenario; uses stream_engine(seed, index).
std::vector<double> gen_series(const Scenario& scenario, std::size_t index);

struct NullSet {
    std::optional<NullSample> simple;
    std::optional<NullSample> full;
};

struct TestTally {
    std::size_t rejections = 0;
    std::size_t degenerate = 0;
};

struct ScenarioResult {
    Scenario scenario;
    std::vector<TestId> tests;
    std::vector<TestTally> tallies;  // parallel to tests
    double wall_seconds = 0.0;

    // rejections / replications; degenerate outcomes count as non-rejections.
    double rate(TestId id) const;
    const TestTally& tally(TestId id) const;
};

ScenarioResult run_scenario(const Scenario& scenario, const std::vector<TestId>& tests,
                            const NullSet& nulls, std::size_t workers = 0);

std::vector<ScenarioResult> run_grid(const std::vector<Scenario>& scenarios,
                                     const std::vector<TestId>& tests, const NullSet& nulls,
                                     std::size_t workers = 0);

// Dimension to keep (next to n) when marginalizing a grid, mirroring the
// layout of one-factor-at-a-time rejection tables.
enum class GridDimension { mean, variance, c_sigma, error };
std::string_view to_string(GridDimension d);

struct AggregateRow {
    std::size_t n = 0;
    std::string level;  // value of the kept dimension
    std::size_t cells = 0;
    std::size_t replications = 0;
    std::vector<double> rates;  // parallel to tests; equal-weight mean over cells
};

std::vector<AggregateRow> aggregate(const std::vector<ScenarioResult>& results,
                                    GridDimension keep);

// Grid description: ';'-separated key=value lists, e.g.
//   "mu=0;sigma=0,1,2,3;c=0.25,0.5,1;eps=iid,ma,ar;n=100,200,500,1000"
// or one of the presets "null", "alternative", "smoke". Missing keys take
// the defaults mu=0, sigma=0, c=1, eps=iid, n=500.
struct GridSpec {
    std::vector<MeanId> means{MeanId::mu0};
    std::vector<VarianceId> variances{VarianceId::sigma0};
    std::vector<double> c_sigmas{1.0};
    std::vector<ErrorModel> errors{ErrorModel::iid};
    std::vector<std::size_t> sizes{500};
};

GridSpec parse_grid_spec(std::string_view text);
std::vector<Scenario> expand_grid(const GridSpec& spec, std::size_t replications, double alpha,
                                  std::uint64_t seed);

// CSV writers. Rates are printed with fixed 6 decimals so output is stable.
void write_cells_csv(std::ostream& out, const std::vector<ScenarioResult>& results,
                     const std::vector<TestId>& tests);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows,
                         GridDimension keep, const std::vector<TestId>& tests);

}  // namespace sncusum
