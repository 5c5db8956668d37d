#pragma once

// Command-line front end. `run` is the whole program minus process
// plumbing so tests can drive every subcommand in-process.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace sncusum::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,       // bad flags, invalid or inconsistent parameters
    exit_degenerate = 2,  // statistic with zero denominator
    exit_io = 3,          // unreadable/unwritable files, parse errors, cache problems
    exit_check_failed = 4 // `validate` ran but at least one check failed
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// One numeric value per row; with several comma-separated fields the last
// one is used. A non-numeric first row is treated as a header.
std::vector<double> read_series_csv(std::istream& in, const std::string& source);

struct AnnualSeries {
    std::vector<std::pair<int, double>> rows;  // (year, mean), ascending year
    std::size_t skipped_rows = 0;              // rows with a missing value
    std::size_t omitted_years = 0;             // years without any valid value
};

// Reads "date,value" rows (date starting with a 4-digit year, e.g.
// 1910-07-01) and averages values per calendar year. Empty, NA and NaN
// values are skipped.
AnnualSeries aggregate_daily(std::istream& in, const std::string& source);
void write_annual_csv(std::ostream& out, const AnnualSeries& series);

// $SN_CUSUM_CACHE, else $XDG_CACHE_HOME/sn_cusum, else ~/.cache/sn_cusum.
std::filesystem::path default_cache_dir();

}  // namespace sncusum::cli
