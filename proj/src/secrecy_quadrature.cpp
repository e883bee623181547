#include "kms/secrecy_quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "kms/quadrature.hpp"

namespace kms::quadrature {

namespace {

constexpr int kMaxCutDoublings = 60;

// pdf/cdf of one link, memoized on the nodes visited during one metric
// evaluation. Never shared between calls.
class CachedLink
{
  public:
    explicit CachedLink(const ChannelParams& p) : params_(p) {}

    const ChannelParams& params() const { return params_; }

    double pdf(double g)
    {
        auto [it, inserted] = pdf_.try_emplace(g, 0.0);
        if (inserted) it->second = kms::pdf(params_, g);
        return it->second;
    }

    double cdf(double g)
    {
        auto [it, inserted] = cdf_.try_emplace(g, 0.0);
        if (inserted) it->second = kms::cdf(params_, g);
        return it->second;
    }

  private:
    ChannelParams params_;
    std::unordered_map<double, double> pdf_;
    std::unordered_map<double, double> cdf_;
};

// Bound on int_T^inf ln(1+g) f(g) dg using ln(1+g) <= ln(1+T) + g/(1+T) and
// E[g 1{g>T}] <= sqrt(E[g^2] Pr(g>T)).
double log_tail_bound(const ChannelParams& p, double cut)
{
    const double surv = survival_bound(p, cut);
    return std::log1p(cut) * surv + std::sqrt(second_moment(p) * surv) / (1.0 + cut);
}

double probability_tail_bound(const ChannelParams& p, double cut)
{
    return survival_bound(p, cut);
}

template <class Tail>
double choose_cut(double start, double target, Tail&& tail)
{
    double cut = start;
    for (int i = 0; i < kMaxCutDoublings && tail(cut) > target; ++i) cut *= 2.0;
    return cut;
}

// Integration of g over [0, cut] after the substitution g = s^power, which
// removes the integrable gamma^{mu-1} singularity at the origin when mu < 1.
class Integrator
{
  public:
    Integrator(const SecrecyScenario& s, const QuadControl& q) : q_(q)
    {
        const double mu_min = std::min(s.d_link.mu(), s.e_link.mu());
        power_ = mu_min < 1.0 ? static_cast<int>(std::ceil(1.0 / mu_min)) : 1;
        smallest_ = 1e-3 * std::min(s.d_link.gamma_bar(), s.e_link.gamma_bar());
        start_ = q.tail_cut * std::max(s.d_link.gamma_bar(), s.e_link.gamma_bar());
    }

    double start_cut() const { return start_; }
    double tail_target() const { return 0.5 * q_.abs_tol; }

    quad::Outcome run(const std::function<double(double)>& g, double cut) const
    {
        // Geometric breakpoints concentrate the initial rule where the mass
        // of the densities sits, however large the cut is.
        std::vector<double> breaks;
        for (double x = cut; x > smallest_; x *= 0.25) breaks.push_back(to_s(x));
        breaks.push_back(0.0);
        std::reverse(breaks.begin(), breaks.end());

        const int k = power_;
        auto h = [&g, k](double s) {
            if (k == 1) return g(s);
            double x = std::pow(s, k);
            return g(x) * k * std::pow(s, k - 1);
        };
        return quad::integrate(h, breaks, tail_target(), q_.rel_tol, q_.max_subdivisions);
    }

  private:
    double to_s(double x) const { return power_ == 1 ? x : std::pow(x, 1.0 / power_); }

    QuadControl q_;
    int power_ = 1;
    double smallest_ = 0.0;
    double start_ = 0.0;
};

MetricResult finish(const quad::Outcome& out, double tail, const char* what)
{
    // The integrands are non-negative products of pdf and cdf values that are
    // themselves accurate only to the series tolerance.
    const double evaluation = 4.0 * specfun::SeriesControl{}.rel_tol * std::abs(out.value);
    MetricResult r{out.value, Method::quadrature, out.abs_error + tail + evaluation};
    if (!out.converged) throw QuadratureError(std::string(what) + ": tolerance not met", r);
    return r;
}

MetricResult finish_probability(const quad::Outcome& out, double tail, const char* what)
{
    MetricResult r = finish(out, tail, what);
    r.value = std::clamp(r.value, 0.0, 1.0);
    return r;
}

MetricResult outage_integral(const SecrecyScenario& s, const QuadControl& q, bool lower_bound)
{
    q.validate();
    Integrator integ(s, q);
    CachedLink d(s.d_link);
    CachedLink e(s.e_link);
    const double theta = s.theta();
    const double offset = lower_bound ? 0.0 : theta - 1.0;
    const double cut = choose_cut(integ.start_cut(), integ.tail_target(),
                                  [&](double t) { return probability_tail_bound(s.e_link, t); });
    auto g = [&](double x) {
        double f = e.pdf(x);
        if (f == 0.0) return 0.0;
        return d.cdf(theta * x + offset) * f;
    };
    quad::Outcome out = integ.run(g, cut);
    return finish_probability(out, probability_tail_bound(s.e_link, cut),
                              lower_bound ? "sop_lower" : "sop");
}

} // namespace

void QuadControl::validate() const
{
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("QuadControl: tolerances must be > 0");
    if (max_subdivisions < 1) throw std::invalid_argument("QuadControl: max_subdivisions must be >= 1");
    if (!(tail_cut >= 10.0)) throw std::invalid_argument("QuadControl: tail_cut must be >= 10");
}

AscParts asc_parts(const SecrecyScenario& s, const QuadControl& q)
{
    q.validate();
    Integrator integ(s, q);
    CachedLink d(s.d_link);
    CachedLink e(s.e_link);
    const double cut = choose_cut(integ.start_cut(), integ.tail_target(), [&](double t) {
        return std::max(log_tail_bound(s.d_link, t), log_tail_bound(s.e_link, t));
    });

    auto g1 = [&](double x) {
        double f = d.pdf(x);
        return f == 0.0 ? 0.0 : std::log1p(x) * f * e.cdf(x);
    };
    auto g2 = [&](double x) {
        double f = e.pdf(x);
        return f == 0.0 ? 0.0 : std::log1p(x) * f * d.cdf(x);
    };
    auto g3 = [&](double x) { return std::log1p(x) * e.pdf(x); };

    AscParts parts;
    parts.i1 = finish(integ.run(g1, cut), log_tail_bound(s.d_link, cut), "asc/i1");
    parts.i2 = finish(integ.run(g2, cut), log_tail_bound(s.e_link, cut), "asc/i2");
    parts.i3 = finish(integ.run(g3, cut), log_tail_bound(s.e_link, cut), "asc/i3");
    return parts;
}

MetricResult asc(const SecrecyScenario& s, const QuadControl& q)
{
    AscParts p = asc_parts(s, q);
    double value = p.i1.value + p.i2.value - p.i3.value;
    double err = p.i1.err_est + p.i2.err_est + p.i3.err_est;
    return {std::max(value, 0.0), Method::quadrature, err};
}

MetricResult sop(const SecrecyScenario& s, const QuadControl& q)
{
    return outage_integral(s, q, false);
}

MetricResult sop_lower(const SecrecyScenario& s, const QuadControl& q)
{
    return outage_integral(s, q, true);
}

MetricResult spsc(const SecrecyScenario& s, const QuadControl& q)
{
    MetricResult outage = sop(s.with_rate(0.0), q);
    return {1.0 - outage.value, Method::quadrature, outage.err_est};
}

MetricResult evaluate(Metric metric, const SecrecyScenario& s, const QuadControl& q)
{
    switch (metric) {
    case Metric::asc: return asc(s, q);
    case Metric::sop: return sop(s, q);
    case Metric::sop_lower: return sop_lower(s, q);
    case Metric::spsc: return spsc(s, q);
    }
    throw std::invalid_argument("unknown metric");
}

} // namespace kms::quadrature
