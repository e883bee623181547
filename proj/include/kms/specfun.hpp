#pragma once

// Real-valued special functions used by the fading model and the secrecy
// metrics: log-gamma, upper incomplete gamma (including non-positive integer
// orders), Kummer's confluent hypergeometric function and the Humbert
// bivariate series Phi2.

#include <stdexcept>
#include <string>

namespace kms::specfun {

/// Truncation control for the infinite series evaluated here.
struct SeriesControl
{
    double rel_tol = 1e-12;
    int max_terms = 100000;

    void validate() const;
};

/// Raised when a series hits its term cap before reaching rel_tol.
class ConvergenceError : public std::runtime_error
{
  public:
    ConvergenceError(const std::string& what, double best_estimate)
        : std::runtime_error(what), best_estimate_(best_estimate)
    {
    }

    double best_estimate() const noexcept { return best_estimate_; }

  private:
    double best_estimate_;
};

/// A real number stored as sign * exp(log_abs). sign == 0 encodes zero.
struct SignedLog
{
    double log_abs = 0.0;
    int sign = 1;

    double value() const;
};

double ln_gamma(double x);

/// ln|(a)_n| and the sign of the rising factorial (a)_n = a(a+1)...(a+n-1).
SignedLog log_pochhammer(double a, int n);

/// ln C(n, k) for 0 <= k <= n.
double log_binomial(int n, int k);

/// Exponential integral E1(x) for x > 0.
double exp_integral_e1(double x);

/// Gamma(a, x) = int_x^inf t^{a-1} e^{-t} dt for any real a and x > 0.
double upper_incomplete_gamma(double a, double x);

/// e^x * Gamma(a, x); finite where Gamma(a, x) itself would underflow.
double upper_incomplete_gamma_scaled(double a, double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// 1F1(a; b; x). Negative x goes through Kummer's transformation.
double kummer_1f1(double a, double b, double x, const SeriesControl& ctl = {});

/// ln|1F1(a; b; x)| with sign; does not overflow for large |x|.
SignedLog log_kummer_1f1(double a, double b, double x, const SeriesControl& ctl = {});

/// Phi2(b1, b2; c; x, y) = sum_{p,q} (b1)_p (b2)_q x^p y^q / ((c)_{p+q} p! q!).
double phi2(double b1, double b2, double c, double x, double y, const SeriesControl& ctl = {});

/// Log-domain Phi2.
SignedLog log_phi2(double b1, double b2, double c, double x, double y,
                   const SeriesControl& ctl = {});

/// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x)
/// for a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// L(n, a) = int_0^inf ln(1 + x) x^{n-1} e^{-a x} dx, evaluated in closed form
/// as (n-1)! e^a sum_{k=1}^{n} Gamma(k - n, a) / a^k.
double log_moment_integral(int n, double a);

} // namespace kms::specfun
