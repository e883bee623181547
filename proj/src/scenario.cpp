#include "kms/scenario.hpp"

namespace kms {

std::string_view to_string(Method m) noexcept
{
    switch (m) {
    case Method::closed: return "closed";
    case Method::quadrature: return "quad";
    case Method::monte_carlo: return "mc";
    }
    return "?";
}

std::string_view to_string(Metric m) noexcept
{
    switch (m) {
    case Metric::asc: return "asc";
    case Metric::sop: return "sop";
    case Metric::sop_lower: return "sopl";
    case Metric::spsc: return "spsc";
    }
    return "?";
}

} // namespace kms
