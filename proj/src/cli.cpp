#include "sncusum/cli.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string_view>

#include "CLI11.hpp"
#include "json.hpp"

#include "sncusum/block_process.hpp"
#include "sncusum/change_tests.hpp"
#include "sncusum/errors.hpp"
#include "sncusum/nulldist.hpp"
#include "sncusum/simgen.hpp"
#include "sncusum/validation.hpp"

namespace sncusum::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(std::string_view field) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return std::nullopt;
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

ordered_json provenance_json(const NullProvenance& p) {
    ordered_json j;
    j["kind"] = std::string(to_string(p.kind));
    j["m"] = p.steps;
    j["N"] = p.replications;
    j["seed"] = p.seed;
    return j;
}

NullSample load_null(const std::string& cache, NullKind kind) {
    const fs::path base = cache.empty() ? default_cache_dir() : fs::path(cache);
    const bool is_file = fs::is_regular_file(base) || base.extension() == ".snq";
    const fs::path file = is_file ? base : cache_file_name(base, kind);
    if (!fs::exists(file))
        throw IoError("no " + std::string(to_string(kind)) + " null sample at '" + file.string() +
                      "'; precompute it with `sn_cusum nulldist --out " +
                      file.parent_path().string() + "`");
    NullSample sample = cache_read(file);
    if (sample.kind() != kind)
        throw ProvenanceError("'" + file.string() + "' holds a " +
                              std::string(to_string(sample.kind())) + " sample, need " +
                              std::string(to_string(kind)));
    return sample;
}

struct TestArgs {
    std::string input;
    std::string method = "full-v2";
    double alpha = 0.05;
    std::optional<std::size_t> block_size;
    std::optional<double> t0;
    std::optional<double> t1;
    std::string null_cache;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
    auto in = open_input(a.input);
    const auto values = read_series_csv(in, a.input);
    const SeriesView series(values);
    const BlockConfig cfg = make_block_config(series.size(), a.block_size);

    ordered_json j;
    j["method"] = a.method;
    j["n"] = cfg.n;
    j["b_n"] = cfg.block_length;
    j["alpha"] = a.alpha;

    TestOutcome outcome;
    std::optional<NullProvenance> provenance;
    if (a.method == "lrv") {
        outcome = cusum_lrv_test(series, a.alpha);
    } else {
        if (cfg.n < 4 * cfg.block_count)
            throw InvalidInput("series too short for the block layout: n=" +
                               std::to_string(cfg.n) + " < 4*ell=" +
                               std::to_string(4 * cfg.block_count));
        if (a.method == "simple") {
            const NullSample null = load_null(a.null_cache, NullKind::simple_ratio);
            outcome = decide_simple(series, cfg, a.alpha, null);
            provenance = null.provenance;
        } else {
            TestParams params = TestParams::for_variant(
                a.method == "full-v1" ? Variant::v1 : Variant::v2, a.alpha);
            if (a.t0) params.t0 = *a.t0;
            if (a.t1) params.t1 = *a.t1;
            params.validate();
            knot_pair(cfg, params.t0, params.t1);
            const NullSample null = load_null(a.null_cache, NullKind::full_ratio);
            outcome = decide_full(series, cfg, params, null);
            provenance = null.provenance;
        }
    }

    j["t0"] = outcome.t0 ? ordered_json(*outcome.t0) : ordered_json(nullptr);
    j["t1"] = outcome.t1 ? ordered_json(*outcome.t1) : ordered_json(nullptr);
    j["factor"] = outcome.factor;
    j["statistic"] = outcome.statistic;
    j["quantile"] = outcome.quantile;
    j["threshold"] = outcome.threshold;
    j["p_value"] = outcome.p_value;
    j["reject"] = outcome.reject;
    j["null"] = provenance ? provenance_json(*provenance) : ordered_json(nullptr);
    out << j.dump() << '\n';
    return exit_ok;
}

struct NulldistArgs {
    std::size_t steps = default_null_steps;
    std::size_t reps = default_null_replications;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string kind = "both";
    std::size_t workers = 0;
};

int cmd_nulldist(const NulldistArgs& a, std::ostream& out) {
    const fs::path dir = a.out_dir.empty() ? default_cache_dir() : fs::path(a.out_dir);
    std::vector<NullKind> kinds;
    if (a.kind == "both" || a.kind == "simple-ratio") kinds.push_back(NullKind::simple_ratio);
    if (a.kind == "both" || a.kind == "full-ratio") kinds.push_back(NullKind::full_ratio);

    ordered_json summary = ordered_json::array();
    for (NullKind kind : kinds) {
        const NullSample sample = simulate_null(kind, a.steps, a.reps, a.seed, a.workers);
        const fs::path file = cache_file_name(dir, kind);
        cache_store(sample, file);
        ordered_json entry = provenance_json(sample.provenance);
        entry["file"] = file.string();
        ordered_json q;
        for (const auto& [level, value] : quantile_table(sample).quantiles)
            q[format_number(level)] = value;
        entry["quantiles"] = q;
        summary.push_back(entry);
    }
    out << summary.dump(2) << '\n';
    return exit_ok;
}

struct SimulateArgs {
    std::string grid = "smoke";
    std::size_t reps = 5000;
    std::uint64_t seed = 1;
    std::size_t workers = 0;
    std::string out_dir;
    double alpha = 0.05;
    std::vector<std::string> tests;
    std::string null_cache;
    std::size_t null_steps = default_null_steps;
    std::size_t null_reps = default_null_replications;
    std::uint64_t null_seed = 1;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    std::vector<TestId> tests;
    if (a.tests.empty())
        tests.assign(all_tests.begin(), all_tests.end());
    else
        for (const auto& t : a.tests) tests.push_back(parse_test_id(t));

    const auto scenarios = expand_grid(parse_grid_spec(a.grid), a.reps, a.alpha, a.seed);

    bool need_simple = false;
    bool need_full = false;
    for (auto t : tests) {
        need_simple |= t == TestId::sn_simple;
        need_full |= t == TestId::sn_full_v1 || t == TestId::sn_full_v2;
    }
    NullSet nulls;
    auto obtain = [&](NullKind kind) {
        if (!a.null_cache.empty()) return load_null(a.null_cache, kind);
        return simulate_null(kind, a.null_steps, a.null_reps, a.null_seed, a.workers);
    };
    if (need_simple) nulls.simple = obtain(NullKind::simple_ratio);
    if (need_full) nulls.full = obtain(NullKind::full_ratio);

    const auto results = run_grid(scenarios, tests, nulls, a.workers);

    const fs::path dir(a.out_dir);
    {
        auto f = open_output(dir / "cells.csv");
        write_cells_csv(f, results, tests);
    }
    for (auto dim : {GridDimension::mean, GridDimension::variance, GridDimension::c_sigma,
                     GridDimension::error}) {
        auto f = open_output(dir / ("by_" + std::string(to_string(dim)) + ".csv"));
        write_aggregate_csv(f, aggregate(results, dim), dim, tests);
    }
    {
        auto f = open_output(dir / "metadata.csv");
        f << "key,value\n";
        f << "grid," << a.grid << '\n';
        f << "cells," << scenarios.size() << '\n';
        f << "replications_per_cell," << a.reps << '\n';
        f << "seed," << a.seed << '\n';
        f << "alpha," << format_number(a.alpha) << '\n';
        f << "block_rule,floor(n^(3/8)) min 2\n";
        f << "lrv_window_rule,floor(n^(1/3))\n";
        for (const auto* null : {&nulls.simple, &nulls.full}) {
            if (!*null) continue;
            const auto& p = (*null)->provenance;
            const std::string prefix = "null_" + std::string(to_string(p.kind));
            f << prefix << "_m," << p.steps << '\n';
            f << prefix << "_N," << p.replications << '\n';
            f << prefix << "_seed," << p.seed << '\n';
        }
    }
    double wall = 0.0;
    for (const auto& r : results) wall += r.wall_seconds;
    out << "simulated " << results.size() << " cell(s) x " << a.reps << " replications in "
        << wall << " s; tables in " << dir.string() << '\n';
    return exit_ok;
}

struct ValidateArgs {
    bool strict = false;
    double tolerance_scale = 1.0;
    std::uint64_t seed = ValidationOptions{}.seed;
    std::size_t workers = 0;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
    ValidationOptions opt;
    opt.extended = a.strict;
    opt.tolerance_scale = a.tolerance_scale;
    opt.seed = a.seed;
    opt.workers = a.workers;
    const auto reports = run_validation_suite(opt);
    ordered_json j = ordered_json::array();
    bool all_pass = true;
    for (const auto& r : reports) {
        j.push_back(to_json(r));
        all_pass = all_pass && r.pass;
    }
    out << j.dump(2) << '\n';
    return all_pass ? exit_ok : exit_check_failed;
}

int cmd_aggregate(const std::string& input, const std::string& output, std::ostream& err) {
    auto in = open_input(input);
    const AnnualSeries annual = aggregate_daily(in, input);
    auto out = open_output(output);
    write_annual_csv(out, annual);
    if (annual.skipped_rows > 0 || annual.omitted_years > 0)
        err << "warning: skipped " << annual.skipped_rows << " row(s) with missing values; "
            << "omitted " << annual.omitted_years << " year(s) without data\n";
    return exit_ok;
}

}  // namespace

fs::path default_cache_dir() {
    if (const char* env = std::getenv("SN_CUSUM_CACHE"); env && *env) return fs::path(env);
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg)
        return fs::path(xdg) / "sn_cusum";
    if (const char* home = std::getenv("HOME"); home && *home)
        return fs::path(home) / ".cache" / "sn_cusum";
    return fs::path(".sn_cusum_cache");
}

std::vector<double> read_series_csv(std::istream& in, const std::string& source) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        const auto comma = row.rfind(',');
        const std::string_view field = comma == std::string_view::npos ? row : row.substr(comma + 1);
        const auto v = parse_number(field);
        if (!v) {
            if (first) {
                first = false;
                continue;
            }
            throw FormatError(source + ":" + std::to_string(line_no) + ": non-numeric value '" +
                              std::string(trim(field)) + "'");
        }
        first = false;
        values.push_back(*v);
    }
    return values;
}

AnnualSeries aggregate_daily(std::istream& in, const std::string& source) {
    struct Acc {
        double sum = 0.0;
        std::size_t count = 0;
    };
    std::map<int, Acc> years;
    AnnualSeries out;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = trim(line);
        if (row.empty()) continue;
        const bool is_first = first;
        first = false;
        const auto comma = row.find(',');
        const std::string_view date = trim(row.substr(0, comma));
        int year = 0;
        auto res = std::from_chars(date.data(), date.data() + date.size(), year);
        const bool has_year = res.ec == std::errc{} && res.ptr - date.data() == 4 &&
                              (res.ptr == date.data() + date.size() || *res.ptr == '-' ||
                               *res.ptr == '/');
        if (!has_year) {
            if (is_first) continue;  // header
            throw FormatError(source + ":" + std::to_string(line_no) + ": bad date '" +
                              std::string(date) + "'");
        }
        if (comma == std::string_view::npos)
            throw FormatError(source + ":" + std::to_string(line_no) + ": missing value column");
        std::string_view value = trim(row.substr(comma + 1));
        if (const auto next = value.find(','); next != std::string_view::npos)
            value = trim(value.substr(0, next));
        Acc& acc = years[year];
        if (value.empty() || value == "NA" || value == "nan" || value == "NaN") {
            ++out.skipped_rows;
            continue;
        }
        const auto v = parse_number(value);
        if (!v)
            throw FormatError(source + ":" + std::to_string(line_no) + ": non-numeric value '" +
                              std::string(value) + "'");
        acc.sum += *v;
        acc.count += 1;
    }
    for (const auto& [year, acc] : years) {
        if (acc.count == 0) {
            ++out.omitted_years;
            continue;
        }
        out.rows.emplace_back(year, acc.sum / static_cast<double>(acc.count));
    }
    return out;
}

void write_annual_csv(std::ostream& out, const AnnualSeries& series) {
    out << "year,value\n";
    for (const auto& [year, value] : series.rows) out << year << ',' << format_number(value) << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Self-normalized CUSUM change-point tests", "sn_cusum"};
    app.require_subcommand(1);

    TestArgs test_args;
    auto* test = app.add_subcommand("test", "Test one series (CSV) for a change in the mean");
    test->add_option("--input", test_args.input, "CSV file with one numeric column")->required();
    test->add_option("--method", test_args.method, "Test to run")
        ->check(CLI::IsMember({"simple", "full-v1", "full-v2", "lrv"}));
    test->add_option("--alpha", test_args.alpha, "Significance level");
    test->add_option("--block-size", test_args.block_size, "Override the block length");
    test->add_option("--t0", test_args.t0, "Override t0 of the full test");
    test->add_option("--t1", test_args.t1, "Override t1 of the full test");
    test->add_option("--null-cache", test_args.null_cache,
                     "Null-sample directory or file (default: $SN_CUSUM_CACHE)");

    NulldistArgs null_args;
    auto* nulldist = app.add_subcommand("nulldist", "Simulate and cache null samples");
    nulldist->add_option("--steps", null_args.steps, "Grid steps per path");
    nulldist->add_option("--reps", null_args.reps, "Replications");
    nulldist->add_option("--seed", null_args.seed, "Seed");
    nulldist->add_option("--out", null_args.out_dir, "Output directory");
    nulldist->add_option("--kind", null_args.kind, "Which sample(s) to produce")
        ->check(CLI::IsMember({"both", "simple-ratio", "full-ratio"}));
    nulldist->add_option("--workers", null_args.workers, "Worker threads (0 = all)");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Run a simulation grid");
    simulate->add_option("--grid", sim_args.grid, "Grid spec or preset (null, alternative, smoke)");
    simulate->add_option("--reps", sim_args.reps, "Replications per cell");
    simulate->add_option("--seed", sim_args.seed, "Seed");
    simulate->add_option("--workers", sim_args.workers, "Worker threads (0 = all)");
    simulate->add_option("--out", sim_args.out_dir, "Output directory")->required();
    simulate->add_option("--alpha", sim_args.alpha, "Significance level");
    simulate->add_option("--tests", sim_args.tests, "Subset of r_lrv,sn_simple,sn_full_v1,sn_full_v2")
        ->delimiter(',');
    simulate->add_option("--null-cache", sim_args.null_cache, "Use cached null samples");
    simulate->add_option("--null-steps", sim_args.null_steps, "Null grid steps when simulating");
    simulate->add_option("--null-reps", sim_args.null_reps, "Null replications when simulating");
    simulate->add_option("--null-seed", sim_args.null_seed, "Null seed when simulating");

    ValidateArgs val_args;
    auto* validate = app.add_subcommand("validate", "Run the oracle and moment checks");
    validate->add_flag("--strict", val_args.strict, "Also run the covariance lattice checks");
    validate->add_option("--tolerance-scale", val_args.tolerance_scale,
                         "Multiply every tolerance by this factor");
    validate->add_option("--seed", val_args.seed, "Seed");
    validate->add_option("--workers", val_args.workers, "Worker threads (0 = all)");

    std::string agg_in;
    std::string agg_out;
    auto* aggregate_cmd = app.add_subcommand("aggregate", "Average daily date,value rows per year");
    aggregate_cmd->add_option("--input", agg_in, "Daily CSV")->required();
    aggregate_cmd->add_option("--out", agg_out, "Annual CSV")->required();

    std::vector<const char*> argv{"sn_cusum"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*test) return cmd_test(test_args, out);
        if (*nulldist) return cmd_nulldist(null_args, out);
        if (*simulate) return cmd_simulate(sim_args, out);
        if (*validate) return cmd_validate(val_args, out);
        if (*aggregate_cmd) return cmd_aggregate(agg_in, agg_out, err);
    } catch (const DegenerateStatistic& e) {
        err << "error: " << e.what() << '\n';
        return exit_degenerate;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
    return exit_usage;
}

}  // namespace sncusum::cli
