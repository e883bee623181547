#pragma once

// Batch front end: single metrics, lambda sweeps and figure data as CSV.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kms/scenario.hpp"

namespace kms::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kMethodMismatch = 3,
    kNonConvergence = 4,
};

/// start:stop:step in dB; a single value is start == stop.
struct LambdaGrid
{
    double start = -10.0;
    double stop = 30.0;
    double step = 1.0;

    void validate() const;
    std::vector<double> values() const;
};

/// Parses "start:stop:step" or "value".
LambdaGrid parse_lambda_grid(const std::string& text);

/// Fading of one link without its average SNR.
struct LinkShape
{
    double kappa = 3.0;
    double mu = 2.0;
    double m = 2.0;

    ChannelParams at(double gamma_bar) const { return {kappa, mu, m, gamma_bar}; }
    bool operator==(const LinkShape&) const = default;
};

struct SweepSpec
{
    LambdaGrid lambda_db;
    double gamma_bar_e = 1.0;
    LinkShape d;
    LinkShape e;
    double rs = 0.0;
    Metric metric = Metric::spsc;
    std::vector<Method> methods;
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 1;
    int jobs = 1;

    /// Throws std::invalid_argument on bad values, an empty method list or
    /// non-integer shapes with the closed method requested.
    void validate() const;
    SecrecyScenario scenario_at(double lambda_db) const;
};

struct Row
{
    double lambda_db = 0.0;
    Metric metric = Metric::spsc;
    Method method = Method::closed;
    MetricResult result;
    std::uint64_t n_samples = 0;  // 0 unless mc
    std::uint64_t seed = 0;       // 0 unless mc
    std::string error;            // empty on success
};

/// Rows ordered by lambda, then method (closed, quad, mc).
std::vector<Row> run_sweep(const SweepSpec& spec);

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const Row& row);
void write_csv(std::ostream& out, const std::vector<Row>& rows);

/// One curve of a figure: the sweep template plus a file-name label.
struct FigureCurve
{
    std::string label;
    SweepSpec spec;
};

/// Curves of figure n (1..8). The analytic method is closed for integer
/// parameters and quad otherwise; mc is appended when with_mc is set.
std::vector<FigureCurve> figure_curves(int n, const LambdaGrid& grid, double gamma_bar_e,
                                       bool with_mc, std::uint64_t samples, std::uint64_t seed,
                                       int workers, int jobs);

/// Whole command line. Errors print one line "error code=<n> reason=<...>"
/// to err and return the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace kms::cli
