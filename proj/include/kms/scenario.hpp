#pragma once

// Shared vocabulary of the secrecy metrics: the wiretap scenario and the
// result record every evaluation path returns.

#include <cmath>
#include <stdexcept>
#include <string_view>

#include "kms/channel.hpp"

namespace kms {

/// Main link (Bob), eavesdropper link (Eve) and target secrecy rate in nats.
struct SecrecyScenario
{
    ChannelParams d_link;
    ChannelParams e_link;
    double rs = 0.0;

    SecrecyScenario(const ChannelParams& d, const ChannelParams& e, double rate = 0.0)
        : d_link(d), e_link(e), rs(rate)
    {
        if (!std::isfinite(rate) || rate < 0.0) {
            throw std::invalid_argument("target secrecy rate must be finite and >= 0");
        }
    }

    /// Secrecy threshold exp(rs) >= 1.
    double theta() const { return std::exp(rs); }

    SecrecyScenario with_rate(double rate) const { return {d_link, e_link, rate}; }
};

enum class Method { closed, quadrature, monte_carlo };

enum class Metric { asc, sop, sop_lower, spsc };

std::string_view to_string(Method m) noexcept;
std::string_view to_string(Metric m) noexcept;

struct MetricResult
{
    double value = 0.0;
    Method method = Method::closed;
    double err_est = 0.0;
};

} // namespace kms
