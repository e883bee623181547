#pragma once

// kappa-mu shadowed fading model of the instantaneous SNR of one link.

#include <cstdint>
#include <random>
#include <vector>

#include "kms/specfun.hpp"

namespace kms {

/// Finite stand-in for the m -> infinity (no shadowing) limit.
inline constexpr double kMCap = 5e4;

/// The four parameters of one kappa-mu shadowed link. Validated on
/// construction: kappa >= 0, mu > 0, m > 0, gamma_bar > 0, all finite.
class ChannelParams
{
  public:
    ChannelParams(double kappa, double mu, double m, double gamma_bar);

    double kappa() const noexcept { return kappa_; }
    double mu() const noexcept { return mu_; }
    double m() const noexcept { return m_; }
    double gamma_bar() const noexcept { return gamma_bar_; }

    /// Same fading, different average SNR.
    ChannelParams with_gamma_bar(double gamma_bar) const;

    /// True when both mu and m are positive integers (closed forms apply).
    bool has_integer_shape() const noexcept;

    bool operator==(const ChannelParams&) const = default;

  private:
    double kappa_;
    double mu_;
    double m_;
    double gamma_bar_;
};

/// Density normalizer and exponential rates of the PDF/CDF.
///   theta_norm = mu^mu m^m (1+kappa)^mu / (Gamma(mu) gbar^mu (mu kappa + m)^m)
///   a_coef     = mu (1 + kappa) / gbar
///   b_coef     = mu^2 kappa (1 + kappa) / ((mu kappa + m) gbar)
///   c_coef     = m / (mu kappa + m) * a_coef
/// a_coef == b_coef + c_coef.
struct DerivedCoeffs
{
    double theta_norm;
    double a_coef;
    double b_coef;
    double c_coef;
    /// ln(theta_norm); theta_norm itself can overflow for large mu.
    double log_theta_norm;
};

DerivedCoeffs derive_coeffs(const ChannelParams& p);

/// One Gamma component of the integer-parameter representation.
struct MixtureTerm
{
    double weight;  // signed
    int shape;      // >= 1
    double scale;   // > 0, SNR units
};

/// Signed Gamma mixture representing the law exactly for integer mu and m.
struct MixtureRep
{
    int m_count = 0;
    std::vector<MixtureTerm> terms;
};

/// Thrown when an integer-only operation receives non-integer mu or m.
class NonIntegerShapeError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

double pdf(const ChannelParams& p, double snr, const specfun::SeriesControl& ctl = {});
double cdf(const ChannelParams& p, double snr, const specfun::SeriesControl& ctl = {});

/// Mixture weights, shapes and scales. Terms with zero weight (the leading
/// term of the mu > m case) are kept so indices match the usual tabulation.
MixtureRep mixture_rep(const ChannelParams& p);

double pdf_mixture(const MixtureRep& rep, double snr);
double cdf_mixture(const MixtureRep& rep, double snr);

/// E[gamma^2]; used for tail bounds.
double second_moment(const ChannelParams& p);

/// Upper bound on Pr(gamma > snr) from the moment generating function.
double survival_bound(const ChannelParams& p, double snr);

/// Generator of i.i.d. SNR draws via the shadowed noncentral construction:
///   S ~ Gamma(m, 1/m), N ~ Poisson(mu kappa S), W ~ Gamma(mu + N, 2),
///   gamma = gbar W / (2 mu (1 + kappa)).
class ChannelSampler
{
  public:
    explicit ChannelSampler(const ChannelParams& p);

    template <class Engine>
    double operator()(Engine& eng)
    {
        double clusters = mu_;
        if (kappa_ > 0.0) {
            double shadow = shadow_(eng);
            double mean = poisson_scale_ * shadow;
            if (mean > 0.0) {
                std::poisson_distribution<long long> count(mean);
                clusters += static_cast<double>(count(eng));
            }
        }
        std::gamma_distribution<double> power(clusters, 2.0);
        return snr_scale_ * power(eng);
    }

  private:
    double kappa_;
    double mu_;
    double poisson_scale_;
    double snr_scale_;
    std::gamma_distribution<double> shadow_;
};

/// n deterministic draws for a given seed.
std::vector<double> sample(const ChannelParams& p, std::uint64_t seed, std::size_t n);

/// Parameter mappings of the classical special cases. Missing shadowing
/// (m -> infinity) is realised as m = m_cap; missing LoS as kappa = 0.
ChannelParams rayleigh(double gamma_bar);
ChannelParams nakagami(double m, double gamma_bar);
ChannelParams rician(double k_factor, double gamma_bar, double m_cap = kMCap);
ChannelParams rician_shadowed(double k_factor, double m, double gamma_bar);
ChannelParams kappa_mu(double kappa, double mu, double gamma_bar, double m_cap = kMCap);

} // namespace kms
