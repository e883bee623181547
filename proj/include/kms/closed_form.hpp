#pragma once

// Exact secrecy metrics for integer mu and m on both links, built from the
// signed Gamma-mixture form of each link's law. All functions throw
// NonIntegerShapeError when either link has a non-integer mu or m.

#include "kms/scenario.hpp"

namespace kms::closed {

/// The three pieces of the average secrecy capacity, ASC = i1 + i2 - i3:
///   i1 = E[ln(1+gD) F_E(gD)], i2 = E[ln(1+gE) F_D(gE)], i3 = E[ln(1+gE)].
struct AscParts
{
    double i1 = 0.0;
    double i2 = 0.0;
    double i3 = 0.0;
};

AscParts asc_parts(const SecrecyScenario& s);

/// Average secrecy capacity in nats.
MetricResult asc(const SecrecyScenario& s);

/// Pr(ln((1 + gD) / (1 + gE)) <= rs).
MetricResult sop(const SecrecyScenario& s);

/// Pr(gD <= theta gE), a lower bound on sop().
MetricResult sop_lower(const SecrecyScenario& s);

/// 1 - sop() at rs = 0.
MetricResult spsc(const SecrecyScenario& s);

MetricResult evaluate(Metric metric, const SecrecyScenario& s);

} // namespace kms::closed
