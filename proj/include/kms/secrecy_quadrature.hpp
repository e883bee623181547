#pragma once

// Secrecy metrics for arbitrary real parameters by adaptive quadrature of
// their defining integrals over the general PDF/CDF.

#include <stdexcept>
#include <string>

#include "kms/scenario.hpp"

namespace kms::quadrature {

struct QuadControl
{
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    int max_subdivisions = 2000;
    /// Integration stops at tail_cut * max(gbar_D, gbar_E); the cut is pushed
    /// out further while the analytic tail bound exceeds abs_tol / 2.
    double tail_cut = 60.0;

    void validate() const;
};

/// Tolerance not met; carries the best available estimate.
class QuadratureError : public std::runtime_error
{
  public:
    QuadratureError(const std::string& what, MetricResult best)
        : std::runtime_error(what), best_(best)
    {
    }
    const MetricResult& best_estimate() const noexcept { return best_; }

  private:
    MetricResult best_;
};

struct AscParts
{
    MetricResult i1;
    MetricResult i2;
    MetricResult i3;
};

/// ASC = I1 + I2 - I3 with
///   I1 = int ln(1+g) f_D(g) F_E(g) dg, I2 = int ln(1+g) f_E(g) F_D(g) dg,
///   I3 = int ln(1+g) f_E(g) dg.
AscParts asc_parts(const SecrecyScenario& s, const QuadControl& q = {});
MetricResult asc(const SecrecyScenario& s, const QuadControl& q = {});

/// int F_D(theta g + theta - 1) f_E(g) dg.
MetricResult sop(const SecrecyScenario& s, const QuadControl& q = {});

/// int F_D(theta g) f_E(g) dg.
MetricResult sop_lower(const SecrecyScenario& s, const QuadControl& q = {});

/// 1 - sop() at rs = 0.
MetricResult spsc(const SecrecyScenario& s, const QuadControl& q = {});

MetricResult evaluate(Metric metric, const SecrecyScenario& s, const QuadControl& q = {});

} // namespace kms::quadrature
