#pragma once

// Independent oracles for the partial-sum process and numerical checks of
// its first two moments. Everything here evaluates definitions literally and
// shares no code path with the prefix-sum implementation beyond grid_count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "sncusum/block_process.hpp"
#include "sncusum/simgen.hpp"

namespace sncusum {

struct OracleReport {
    std::string name;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::map<std::string, double> parameters;
};

nlohmann::ordered_json to_json(const OracleReport& report);
OracleReport report_from_json(const nlohmann::json& j);

// O(n) indicator loop over the defining sum, using permute_index.
double brute_force_partial_sum(const SeriesView& series, const BlockConfig& cfg, double t,
                               double s);

using RealFunction = std::function<double(double)>;

// Signed integral of f over [a, b] by adaptive Gauss-Kronrod, split at the
// given breakpoints (jump locations).
double integrate(const RealFunction& f, double a, double b,
                 const std::vector<double>& breakpoints = {});

// Signed integral of a mean function; closed form for mu0, mu3, mu6.
double mean_integral(MeanId id, double a, double b);
// Integral of sigma^2 over [0, upper].
double variance_integral(VarianceId id, double upper = 1.0);

// Leading-order expectation of S(t, s) for a noiseless mean function.
//
// With k = floor(nt/ell) complete rows and r = floor(nt) - k*ell elements of
// the next row, the exact sum uses k elements of every block plus element
// k+1 of the first r blocks, giving
//     corrected:  (k/b) int_0^s mu + (1/b) int_0^{min(r b/n, s)} mu
// The as_printed form (k/b) int_0^s mu - (1/b) int_{r b/n}^s mu counts one
// row fewer; it is kept for comparison only.
enum class ExpectationForm { corrected, as_printed };

double expected_partial_sum_formula(MeanId id, const BlockConfig& cfg, double t, double s,
                                    ExpectationForm form = ExpectationForm::corrected);
double expected_partial_sum_formula(const RealFunction& mu, const BlockConfig& cfg, double t,
                                    double s, ExpectationForm form = ExpectationForm::corrected,
                                    const std::vector<double>& breakpoints = {});

// Optimized vs brute-force S on random (series, b, t, s), n <= max_n.
OracleReport check_oracle_equivalence(std::size_t cases, std::size_t max_n, std::uint64_t seed,
                                      double tolerance = 1e-12);

// max over a grid_points x grid_points lattice of (t, s) in [0, 1] of
// |S(t, s) - formula| for the noiseless series mu(i/n). Tolerance is
// tolerance_factor * b / n.
OracleReport check_expectation_formula(const std::string& label, const RealFunction& mu,
                                       const std::vector<double>& breakpoints, std::size_t n,
                                       std::size_t grid_points = 50,
                                       double tolerance_factor = 5.0,
                                       ExpectationForm form = ExpectationForm::corrected);

// Relative deviation of the sample variance of sqrt(n) S(1, 1) (mean-zero
// series with sigma(i/n) iid errors) from int_0^1 sigma^2.
OracleReport check_fclt_variance(VarianceId id, std::size_t n, std::size_t replications,
                                 std::uint64_t seed, double relative_tolerance = 0.10,
                                 std::size_t workers = 0);

// Sample covariance of sqrt(n) S at two points against
// (t1 ^ t2) int_0^{s1 ^ s2} sigma^2, deviation scaled by the limiting
// standard deviations.
OracleReport check_fclt_covariance(VarianceId id, std::size_t n, std::size_t replications,
                                   std::uint64_t seed, double t1, double s1, double t2, double s2,
                                   double tolerance = 0.10, std::size_t workers = 0);

struct ValidationOptions {
    double tolerance_scale = 1.0;  // multiplies every tolerance
    bool extended = false;         // adds the covariance lattice checks
    std::uint64_t seed = 20240611;
    std::size_t workers = 0;
};

std::vector<OracleReport> run_validation_suite(const ValidationOptions& options);

}  // namespace sncusum
