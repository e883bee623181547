#pragma once

// Empirical secrecy metrics from paired independent draws of the main and
// eavesdropper SNRs.

#include <cstdint>
#include <vector>

#include "kms/scenario.hpp"

namespace kms::mc {

struct McConfig
{
    std::uint64_t n_samples = 10'000'000;
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const;
};

/// All four estimates from one sample set. err_est holds the standard error.
struct McMetrics
{
    MetricResult asc;
    MetricResult sop;
    MetricResult sop_lower;
    MetricResult spsc;
    std::uint64_t n_samples = 0;

    const MetricResult& get(Metric m) const;
};

/// Estimators over pairs (gD, gE):
///   asc       mean of max(ln(1+gD) - ln(1+gE), 0)
///   sop       fraction with gD <= theta gE + theta - 1
///   sop_lower fraction with gD <= theta gE
///   spsc      fraction with gD > gE
/// Sample i is drawn by worker i % workers from its own stream, so results are
/// bit-identical for a fixed (seed, workers).
McMetrics mc_metrics(const SecrecyScenario& s, const McConfig& c);

struct Checkpoint
{
    std::uint64_t n = 0;
    McMetrics metrics;
};

/// Running estimates after the first n samples for each n in `checkpoints`
/// (ascending, each <= c.n_samples). The estimate at n == c.n_samples equals
/// mc_metrics(s, c).
std::vector<Checkpoint> mc_convergence(const SecrecyScenario& s, const McConfig& c,
                                       const std::vector<std::uint64_t>& checkpoints);

} // namespace kms::mc
