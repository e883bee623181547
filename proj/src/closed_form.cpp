#include "kms/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kms/specfun.hpp"

namespace kms::closed {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Mixture terms below this fraction of the largest |weight| are dropped;
// they sit under the rounding floor of the sums they feed.
constexpr double kPruneRatio = 1e-17;

struct Component
{
    double weight;
    int shape;
    double rate;  // 1 / scale
    double log_rate;
};

std::vector<Component> components(const ChannelParams& p)
{
    if (!p.has_integer_shape()) {
        throw NonIntegerShapeError("closed-form metrics require integer mu and m on both links");
    }
    const MixtureRep rep = mixture_rep(p);
    double largest = 0.0;
    for (const MixtureTerm& t : rep.terms) largest = std::max(largest, std::abs(t.weight));
    std::vector<Component> out;
    out.reserve(rep.terms.size());
    for (const MixtureTerm& t : rep.terms) {
        if (std::abs(t.weight) <= kPruneRatio * largest) continue;
        double rate = 1.0 / t.scale;
        out.push_back({t.weight, t.shape, rate, std::log(rate)});
    }
    return out;
}

// Signed terms summed in descending magnitude with Neumaier compensation.
class TermSum
{
  public:
    void add(double v) { terms_.push_back(v); }

    double total()
    {
        std::sort(terms_.begin(), terms_.end(),
                  [](double a, double b) { return std::abs(a) > std::abs(b); });
        double sum = 0.0;
        double comp = 0.0;
        for (double v : terms_) {
            double t = sum + v;
            if (std::abs(sum) >= std::abs(v)) {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        return sum + comp;
    }

    double magnitude() const
    {
        double m = 0.0;
        for (double v : terms_) m += std::abs(v);
        return m;
    }

    // Rounding bound: a few ulps of the absolute mass of the terms, plus the
    // relative accuracy of the incomplete-gamma building blocks.
    double error_bound() const { return 64.0 * kEps * magnitude(); }

  private:
    std::vector<double> terms_;
};

double lgam(double x)
{
    return specfun::ln_gamma(x);
}

// E[ln(1 + X)] for X ~ Gamma(shape, 1/rate).
double expected_log1p(int shape, double rate, double log_rate)
{
    double moment = specfun::log_moment_integral(shape, rate);
    return std::exp(shape * log_rate - lgam(shape) + std::log(moment));
}

// sum_x w_x E_x[ln(1 + X) F_Y(X)] with both laws given as mixtures, where
// F_Y(g) = 1 - sum_y w_y e^{-r_y g} sum_{r < psi_y} (r_y g)^r / r!.
void add_cross_terms(const std::vector<Component>& outer, const std::vector<Component>& inner,
                     double sign, TermSum& sum)
{
    for (const Component& x : outer) {
        sum.add(sign * x.weight * expected_log1p(x.shape, x.rate, x.log_rate));
        const double log_norm = x.shape * x.log_rate - lgam(x.shape);
        for (const Component& y : inner) {
            const double rate = x.rate + y.rate;
            for (int r = 0; r < y.shape; ++r) {
                double moment = specfun::log_moment_integral(x.shape + r, rate);
                double log_mag = log_norm + r * y.log_rate - lgam(r + 1.0) + std::log(moment);
                sum.add(-sign * x.weight * y.weight * std::exp(log_mag));
            }
        }
    }
}

MetricResult probability(double complement_sum, double err)
{
    double value = std::clamp(1.0 - complement_sum, 0.0, 1.0);
    return {value, Method::closed, err};
}

} // namespace

AscParts asc_parts(const SecrecyScenario& s)
{
    const auto d = components(s.d_link);
    const auto e = components(s.e_link);
    TermSum i1;
    TermSum i2;
    TermSum i3;
    add_cross_terms(d, e, 1.0, i1);
    add_cross_terms(e, d, 1.0, i2);
    for (const Component& y : e) i3.add(y.weight * expected_log1p(y.shape, y.rate, y.log_rate));
    return {i1.total(), i2.total(), i3.total()};
}

MetricResult asc(const SecrecyScenario& s)
{
    const auto d = components(s.d_link);
    const auto e = components(s.e_link);
    TermSum sum;
    add_cross_terms(d, e, 1.0, sum);
    add_cross_terms(e, d, 1.0, sum);
    for (const Component& y : e) sum.add(-y.weight * expected_log1p(y.shape, y.rate, y.log_rate));
    double value = sum.total();
    double err = sum.error_bound();
    return {std::max(value, 0.0), Method::closed, err};
}

MetricResult sop(const SecrecyScenario& s)
{
    const double theta = s.theta();
    const double gap = theta - 1.0;  // e^{rs} - 1
    // theta = 1: only k = r survives the binomial expansion, which is the
    // lower-bound sum term for term.
    if (gap == 0.0) return sop_lower(s);

    const auto d = components(s.d_link);
    const auto e = components(s.e_link);
    const double log_theta = std::log(theta);
    const double log_gap = std::log(gap);

    TermSum sum;
    for (const Component& x : d) {
        for (int r = 0; r < x.shape; ++r) {
            const double log_d = -gap * x.rate + r * x.log_rate - lgam(r + 1.0);
            for (const Component& y : e) {
                const double beta = theta * x.rate + y.rate;
                const double log_beta = std::log(beta);
                const double log_base = log_d + y.shape * y.log_rate - lgam(y.shape);
                const double w = x.weight * y.weight;
                for (int k = 0; k <= r; ++k) {
                    double log_mag = log_base + specfun::log_binomial(r, k) + k * log_theta +
                                     (r - k) * log_gap + lgam(k + y.shape) - (k + y.shape) * log_beta;
                    sum.add(w * std::exp(log_mag));
                }
            }
        }
    }
    double err = sum.error_bound();
    return probability(sum.total(), err);
}

MetricResult sop_lower(const SecrecyScenario& s)
{
    const auto d = components(s.d_link);
    const auto e = components(s.e_link);
    const double theta = s.theta();
    const double log_theta = std::log(theta);

    TermSum sum;
    for (const Component& y : e) {
        const double log_e = y.shape * y.log_rate - lgam(y.shape);
        for (const Component& x : d) {
            const double log_beta = std::log(theta * x.rate + y.rate);
            for (int r = 0; r < x.shape; ++r) {
                double log_mag = log_e + r * (log_theta + x.log_rate) - lgam(r + 1.0) +
                                 lgam(y.shape + r) - (y.shape + r) * log_beta;
                sum.add(y.weight * x.weight * std::exp(log_mag));
            }
        }
    }
    double err = sum.error_bound();
    return probability(sum.total(), err);
}

MetricResult spsc(const SecrecyScenario& s)
{
    MetricResult outage = sop(s.with_rate(0.0));
    return {1.0 - outage.value, Method::closed, outage.err_est};
}

MetricResult evaluate(Metric metric, const SecrecyScenario& s)
{
    switch (metric) {
    case Metric::asc: return asc(s);
    case Metric::sop: return sop(s);
    case Metric::sop_lower: return sop_lower(s);
    case Metric::spsc: return spsc(s);
    }
    throw std::invalid_argument("unknown metric");
}

} // namespace kms::closed
