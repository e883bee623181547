#pragma once

// Globally adaptive Gauss-Kronrod (10/21 point) integration on a finite
// interval split at caller-supplied breakpoints.

#include <functional>
#include <span>

namespace kms::quad {

struct Outcome
{
    double value = 0.0;
    double abs_error = 0.0;
    int intervals = 0;
    bool converged = false;
};

/// Integrates f over [breaks.front(), breaks.back()]. Subdivides the interval
/// with the largest error estimate until the total estimate is within
/// max(abs_tol, rel_tol |value|) or max_intervals is reached.
Outcome integrate(const std::function<double(double)>& f, std::span<const double> breaks,
                  double abs_tol, double rel_tol, int max_intervals);

/// Single 21-point Kronrod rule with the embedded 10-point Gauss estimate.
struct RuleResult
{
    double kronrod;
    double gauss;
    double error;
};

RuleResult kronrod21(const std::function<double(double)>& f, double a, double b);

} // namespace kms::quad
