#include "kms/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "kms/seeding.hpp"

namespace kms {

namespace {

void require_finite_snr(double snr, const char* who)
{
    if (!std::isfinite(snr) || snr < 0.0) {
        throw std::domain_error(std::string(who) + ": SNR must be finite and >= 0");
    }
}

bool is_positive_integer(double v)
{
    return v >= 1.0 && v == std::floor(v) && v < 1e9;
}

// ln(C/A) = -ln(1 + mu kappa / m) and ln(B/A) = -ln(1 + m / (mu kappa)).
double log_c_over_a(const ChannelParams& p)
{
    return -std::log1p(p.mu() * p.kappa() / p.m());
}

double log_b_over_a(const ChannelParams& p)
{
    return -std::log1p(p.m() / (p.mu() * p.kappa()));
}

// Neumaier-compensated sum.
class CompensatedSum
{
  public:
    void add(double v)
    {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace

ChannelParams::ChannelParams(double kappa, double mu, double m, double gamma_bar)
    : kappa_(kappa), mu_(mu), m_(m), gamma_bar_(gamma_bar)
{
    if (!std::isfinite(kappa) || kappa < 0.0) throw std::invalid_argument("kappa must be finite and >= 0");
    if (!std::isfinite(mu) || !(mu > 0.0)) throw std::invalid_argument("mu must be finite and > 0");
    if (!std::isfinite(m) || !(m > 0.0)) throw std::invalid_argument("m must be finite and > 0");
    if (!std::isfinite(gamma_bar) || !(gamma_bar > 0.0)) {
        throw std::invalid_argument("gamma_bar must be finite and > 0");
    }
}

ChannelParams ChannelParams::with_gamma_bar(double gamma_bar) const
{
    return {kappa_, mu_, m_, gamma_bar};
}

bool ChannelParams::has_integer_shape() const noexcept
{
    return is_positive_integer(mu_) && is_positive_integer(m_);
}

DerivedCoeffs derive_coeffs(const ChannelParams& p)
{
    const double mu = p.mu();
    const double kappa = p.kappa();
    const double m = p.m();
    DerivedCoeffs d{};
    d.a_coef = mu * (1.0 + kappa) / p.gamma_bar();
    d.b_coef = mu * mu * kappa * (1.0 + kappa) / ((mu * kappa + m) * p.gamma_bar());
    d.c_coef = m / (mu * kappa + m) * d.a_coef;
    // Theta = A^mu (C/A)^m / Gamma(mu)
    d.log_theta_norm = mu * std::log(d.a_coef) + m * log_c_over_a(p) - specfun::ln_gamma(mu);
    d.theta_norm = std::exp(d.log_theta_norm);
    return d;
}

double pdf(const ChannelParams& p, double snr, const specfun::SeriesControl& ctl)
{
    require_finite_snr(snr, "pdf");
    const DerivedCoeffs d = derive_coeffs(p);
    if (snr == 0.0) {
        if (p.mu() < 1.0) return std::numeric_limits<double>::infinity();
        if (p.mu() > 1.0) return 0.0;
        return d.theta_norm;
    }
    specfun::SignedLog hyp = specfun::log_kummer_1f1(p.m(), p.mu(), d.b_coef * snr, ctl);
    double log_pdf = d.log_theta_norm + (p.mu() - 1.0) * std::log(snr) - d.a_coef * snr + hyp.log_abs;
    return hyp.sign * std::exp(log_pdf);
}

double cdf(const ChannelParams& p, double snr, const specfun::SeriesControl& ctl)
{
    require_finite_snr(snr, "cdf");
    if (snr == 0.0) return 0.0;
    if (survival_bound(p, snr) < 1e-17) return 1.0;
    const DerivedCoeffs d = derive_coeffs(p);
    const double mu = p.mu();
    const double m = p.m();
    // F = A^{mu-m} C^m gamma^mu / Gamma(mu+1) * Phi2(mu-m, m; mu+1; -A gamma, -C gamma)
    double log_pref = mu * std::log(d.a_coef * snr) + m * log_c_over_a(p) - specfun::ln_gamma(mu + 1.0);
    specfun::SignedLog series =
        specfun::log_phi2(mu - m, m, mu + 1.0, -d.a_coef * snr, -d.c_coef * snr, ctl);
    double value = series.sign * std::exp(log_pref + series.log_abs);
    return std::clamp(value, 0.0, 1.0);
}

MixtureRep mixture_rep(const ChannelParams& p)
{
    if (!p.has_integer_shape()) {
        throw NonIntegerShapeError("mixture_rep: mu and m must be positive integers");
    }
    const DerivedCoeffs d = derive_coeffs(p);
    const int mu = static_cast<int>(p.mu());
    const int m = static_cast<int>(p.m());
    MixtureRep rep;

    if (p.kappa() == 0.0) {
        // No LoS: a plain Gamma(mu, 1/A) law for every m.
        rep.m_count = 0;
        rep.terms.push_back({1.0, mu, 1.0 / d.a_coef});
        return rep;
    }

    const double log_ca = log_c_over_a(p);
    const double log_ba = log_b_over_a(p);

    if (mu > m) {
        const int excess = mu - m;
        rep.m_count = mu;
        rep.terms.reserve(static_cast<std::size_t>(mu) + 1);
        rep.terms.push_back({0.0, excess + 1, 1.0 / d.a_coef});
        for (int j = 1; j <= mu; ++j) {
            double log_w = 0.0;
            int sign = 1;
            MixtureTerm t{};
            if (j <= excess) {
                log_w = specfun::log_binomial(m + j - 2, j - 1) + m * log_ca - (m + j - 1) * log_ba;
                sign = (m % 2 == 0) ? 1 : -1;
                t.shape = excess - j + 1;
                t.scale = 1.0 / d.a_coef;
            } else {
                const int r = j - excess - 1;
                log_w = specfun::log_binomial(j - 2, r) + r * log_ca - (j - 1) * log_ba;
                sign = (r % 2 == 0) ? 1 : -1;
                t.shape = mu - j + 1;
                t.scale = 1.0 / d.c_coef;
            }
            t.weight = sign * std::exp(log_w);
            rep.terms.push_back(t);
        }
        return rep;
    }

    const int count = m - mu;
    rep.m_count = count;
    rep.terms.reserve(static_cast<std::size_t>(count) + 1);
    for (int j = 0; j <= count; ++j) {
        double log_w = specfun::log_binomial(count, j) + j * log_ca + (count - j) * log_ba;
        rep.terms.push_back({std::exp(log_w), m - j, 1.0 / d.c_coef});
    }
    return rep;
}

double pdf_mixture(const MixtureRep& rep, double snr)
{
    require_finite_snr(snr, "pdf_mixture");
    CompensatedSum sum;
    for (const MixtureTerm& t : rep.terms) {
        if (t.weight == 0.0) continue;
        double log_g = -t.shape * std::log(t.scale) - specfun::ln_gamma(t.shape) - snr / t.scale;
        if (t.shape > 1) {
            if (snr == 0.0) continue;
            log_g += (t.shape - 1) * std::log(snr);
        }
        sum.add(t.weight * std::exp(log_g));
    }
    return std::max(sum.value(), 0.0);
}

double cdf_mixture(const MixtureRep& rep, double snr)
{
    require_finite_snr(snr, "cdf_mixture");
    if (snr == 0.0) return 0.0;
    // Both sum Lambda_j P(psi_j, x_j) and 1 - sum Lambda_j Q(psi_j, x_j) are
    // exact; the first is accurate in the lower tail, the second near one.
    CompensatedSum lower;
    CompensatedSum upper;
    for (const MixtureTerm& t : rep.terms) {
        if (t.weight == 0.0) continue;
        double x = snr / t.scale;
        double p = specfun::regularized_gamma_p(t.shape, x);
        double q = specfun::regularized_gamma_q(t.shape, x);
        lower.add(t.weight * p);
        upper.add(t.weight * q);
    }
    double from_lower = lower.value();
    double value = from_lower < 0.5 ? from_lower : 1.0 - upper.value();
    return std::clamp(value, 0.0, 1.0);
}

double second_moment(const ChannelParams& p)
{
    const double mu = p.mu();
    const double kappa = p.kappa();
    const double mean_shape = mu * (1.0 + kappa);
    const double var_count = mu * kappa + mu * mu * kappa * kappa / p.m();
    const double scale = p.gamma_bar() / mean_shape;
    return (mean_shape * (mean_shape + 1.0) + var_count) * scale * scale;
}

double survival_bound(const ChannelParams& p, double snr)
{
    if (!(snr > p.gamma_bar())) return 1.0;
    const DerivedCoeffs d = derive_coeffs(p);
    const double excess = p.mu() - p.m();
    const double m = p.m();
    // log E[e^{s gamma}] - s snr, convex in s on [0, C); minimised by bisection
    // on its derivative.
    auto slope = [&](double s) { return -snr + excess / (d.a_coef - s) + m / (d.c_coef - s); };
    double lo = 0.0;
    double hi = d.c_coef;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (slope(mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    const double s = lo;
    double log_bound = -s * snr - excess * std::log1p(-s / d.a_coef) - m * std::log1p(-s / d.c_coef);
    return std::min(1.0, std::exp(log_bound));
}

ChannelSampler::ChannelSampler(const ChannelParams& p)
    : kappa_(p.kappa()),
      mu_(p.mu()),
      poisson_scale_(p.mu() * p.kappa()),
      snr_scale_(p.gamma_bar() / (2.0 * p.mu() * (1.0 + p.kappa()))),
      shadow_(p.m(), 1.0 / p.m())
{
}

std::vector<double> sample(const ChannelParams& p, std::uint64_t seed, std::size_t n)
{
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    std::mt19937_64 eng(derive_stream_seed(seed, 0));
    ChannelSampler draw(p);
    std::vector<double> out(n);
    for (double& v : out) v = draw(eng);
    return out;
}

ChannelParams rayleigh(double gamma_bar)
{
    return {0.0, 1.0, kMCap, gamma_bar};
}

ChannelParams nakagami(double m, double gamma_bar)
{
    return {0.0, m, kMCap, gamma_bar};
}

ChannelParams rician(double k_factor, double gamma_bar, double m_cap)
{
    return {k_factor, 1.0, m_cap, gamma_bar};
}

ChannelParams rician_shadowed(double k_factor, double m, double gamma_bar)
{
    return {k_factor, 1.0, m, gamma_bar};
}

ChannelParams kappa_mu(double kappa, double mu, double gamma_bar, double m_cap)
{
    return {kappa, mu, m_cap, gamma_bar};
}

} // namespace kms
