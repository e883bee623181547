#include "kms/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

namespace kms::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxFractionIterations = 10000;

bool is_nonpositive_integer(double v)
{
    return v <= 0.0 && v == std::floor(v);
}

double lgamma_reentrant(double x, int* sign)
{
    // lgamma() writes the global signgam; lgamma_r keeps us reentrant.
    return ::lgamma_r(x, sign);
}

// Streaming sum of signed terms given in log form. The running sum is kept
// relative to a scale that only moves up, so no term overflows.
class LogAccumulator
{
  public:
    void add(double log_abs, int sign)
    {
        if (sign == 0 || log_abs == -std::numeric_limits<double>::infinity()) {
            return;
        }
        if (empty_) {
            scale_ = log_abs;
            empty_ = false;
        } else if (log_abs > scale_ + 50.0) {
            sum_ *= std::exp(scale_ - log_abs);
            comp_ *= std::exp(scale_ - log_abs);
            scale_ = log_abs;
        }
        // Neumaier compensated addition.
        double term = sign * std::exp(log_abs - scale_);
        double t = sum_ + term;
        if (std::abs(sum_) >= std::abs(term)) {
            comp_ += (sum_ - t) + term;
        } else {
            comp_ += (term - t) + sum_;
        }
        sum_ = t;
    }

    SignedLog result() const
    {
        double total = sum_ + comp_;
        if (empty_ || total == 0.0) {
            return {-std::numeric_limits<double>::infinity(), 0};
        }
        return {scale_ + std::log(std::abs(total)), total > 0.0 ? 1 : -1};
    }

    double log_abs() const { return result().log_abs; }

  private:
    bool empty_ = true;
    double scale_ = 0.0;
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// e^x Gamma(a, x) by the Legendre continued fraction (modified Lentz).
// Converges for every real a once x is moderately large.
double gamma_cf_scaled(double a, double x)
{
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxFractionIterations; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            return std::exp(a * std::log(x) + std::log(h));
        }
    }
    throw ConvergenceError("upper_incomplete_gamma: continued fraction did not converge",
                           std::exp(a * std::log(x) + std::log(h)));
}

// sum_k x^k / (a)_{k+1}, so that gamma(a, x) = x^a e^{-x} * series.
double lower_gamma_series(double a, double x)
{
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxFractionIterations; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kEps) return sum;
    }
    throw ConvergenceError("upper_incomplete_gamma: series did not converge", sum);
}

double e1_series(double x)
{
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < kMaxFractionIterations; ++k) {
        term *= -x / k;
        double contrib = term / k;
        sum += contrib;
        if (std::abs(contrib) < std::abs(sum) * kEps) break;
    }
    return -std::numbers::egamma - std::log(x) - sum;
}

// ln 1F1(a; b; z) for z >= 0 by direct summation in log space.
SignedLog log_series_1f1(double a, double b, double z, const SeriesControl& ctl)
{
    if (z == 0.0 || a == 0.0) return {0.0, 1};
    const double log_z = std::log(z);
    const double log_tol = std::log(ctl.rel_tol);

    LogAccumulator acc;
    acc.add(0.0, 1);
    double log_term = 0.0;
    int sign = 1;
    for (int k = 0; k < ctl.max_terms; ++k) {
        double num = a + k;
        if (num == 0.0) return acc.result();  // polynomial case
        double den = (b + k) * (k + 1);
        log_term += std::log(std::abs(num)) + log_z - std::log(std::abs(den));
        if ((num < 0.0) != (den < 0.0)) sign = -sign;
        acc.add(log_term, sign);

        const double kk = k + 1.0;
        if (kk > -a && kk > -b) {
            double r = z / (kk + 1.0) * std::max(1.0, (a + kk) / (b + kk));
            if (r < 1.0 && log_term + std::log(r / (1.0 - r)) < acc.log_abs() + log_tol) {
                return acc.result();
            }
        }
    }
    throw ConvergenceError("kummer_1f1: term cap reached before tolerance", acc.result().value());
}

// Large-z expansion 1F1(a; b; z) ~ Gamma(b)/Gamma(a) e^z z^{a-b}
// sum_k (b-a)_k (1-a)_k / (k! z^k), with the exponentially smaller companion
// term dropped. Empty when the series diverges before meeting the tolerance.
std::optional<SignedLog> log_asymptotic_1f1(double a, double b, double z, const SeriesControl& ctl)
{
    if (z < 40.0 || is_nonpositive_integer(a)) return std::nullopt;
    LogAccumulator acc;
    acc.add(0.0, 1);
    double log_term = 0.0;
    int sign = 1;
    const double log_z = std::log(z);
    const double log_tol = std::log(ctl.rel_tol * 0.1);
    bool done = false;
    for (int k = 0; k < 200; ++k) {
        double num = (b - a + k) * (1.0 - a + k);
        if (num == 0.0) {
            done = true;
            break;
        }
        double step = std::log(std::abs(num)) - std::log(k + 1.0) - log_z;
        if (step >= 0.0) break;
        log_term += step;
        if (num < 0.0) sign = -sign;
        acc.add(log_term, sign);
        if (log_term < acc.log_abs() + log_tol) {
            done = true;
            break;
        }
    }
    if (!done) return std::nullopt;
    int sa = 1;
    int sb = 1;
    int sc = 1;
    double lga = lgamma_reentrant(a, &sa);
    double lgb = lgamma_reentrant(b, &sb);
    SignedLog r = acc.result();
    r.log_abs += lgb - lga + z + (a - b) * log_z;
    // Size of the dropped Gamma(b)/Gamma(b-a) (-z)^{-a} term.
    if (!is_nonpositive_integer(b - a)) {
        double companion = lgb - lgamma_reentrant(b - a, &sc) - a * log_z;
        if (companion > r.log_abs + log_tol) return std::nullopt;
    }
    r.sign *= sa * sb;
    return r;
}

} // namespace

void SeriesControl::validate() const
{
    if (!(rel_tol > 0.0)) throw std::invalid_argument("SeriesControl: rel_tol must be > 0");
    if (max_terms < 1) throw std::invalid_argument("SeriesControl: max_terms must be >= 1");
}

double SignedLog::value() const
{
    if (sign == 0) return 0.0;
    return sign * std::exp(log_abs);
}

double ln_gamma(double x)
{
    if (!(x > 0.0)) throw std::domain_error("ln_gamma: argument must be positive");
    int sign = 1;
    return lgamma_reentrant(x, &sign);
}

SignedLog log_pochhammer(double a, int n)
{
    if (n < 0) throw std::domain_error("log_pochhammer: n must be >= 0");
    if (n == 0) return {0.0, 1};
    if (is_nonpositive_integer(a)) {
        if (n > -a) return {-std::numeric_limits<double>::infinity(), 0};
        SignedLog out{0.0, 1};
        for (int k = 0; k < n; ++k) {
            out.log_abs += std::log(std::abs(a + k));
            out.sign = -out.sign;
        }
        return out;
    }
    int s_hi = 1;
    int s_lo = 1;
    double hi = lgamma_reentrant(a + n, &s_hi);
    double lo = lgamma_reentrant(a, &s_lo);
    return {hi - lo, s_hi * s_lo};
}

double log_binomial(int n, int k)
{
    if (k < 0 || k > n) throw std::domain_error("log_binomial: need 0 <= k <= n");
    return ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
}

double exp_integral_e1(double x)
{
    if (!(x > 0.0)) throw std::domain_error("exp_integral_e1: argument must be positive");
    if (x <= 1.0) return e1_series(x);
    return std::exp(-x) * gamma_cf_scaled(0.0, x);
}

double upper_incomplete_gamma_scaled(double a, double x)
{
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("upper_incomplete_gamma: x must be positive and finite");
    }
    if (!std::isfinite(a)) throw std::domain_error("upper_incomplete_gamma: a must be finite");

    if (a > 0.0) {
        if (x >= a + 1.0) return gamma_cf_scaled(a, x);
        double lower = std::exp(a * std::log(x)) * lower_gamma_series(a, x);
        return std::exp(x + ln_gamma(a)) - lower;
    }
    if (x > 1.0) return gamma_cf_scaled(a, x);

    // x <= 1, a <= 0: start from order in (0, 1] (or 0) and recur down with
    // G(s) = (G(s+1) - x^s) / s, where G(s) = e^x Gamma(s, x). For x <= 1 the
    // x^s term dominates each step, so the recurrence loses nothing.
    const int steps = static_cast<int>(std::ceil(-a));
    double s = a + steps;
    double g = 0.0;
    if (s == 0.0) {
        g = std::exp(x) * e1_series(x);
    } else {
        double lower = std::exp(s * std::log(x)) * lower_gamma_series(s, x);
        g = std::exp(x + ln_gamma(s)) - lower;
    }
    for (int i = 0; i < steps; ++i) {
        s -= 1.0;
        g = (g - std::exp(s * std::log(x))) / s;
    }
    return g;
}

double upper_incomplete_gamma(double a, double x)
{
    return std::exp(-x) * upper_incomplete_gamma_scaled(a, x);
}

double regularized_gamma_p(double a, double x)
{
    if (!(a > 0.0)) throw std::domain_error("regularized_gamma_p: a must be positive");
    if (!(x >= 0.0)) throw std::domain_error("regularized_gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        return std::exp(a * std::log(x) - x - ln_gamma(a)) * lower_gamma_series(a, x);
    }
    return 1.0 - std::exp(-x - ln_gamma(a)) * gamma_cf_scaled(a, x);
}

double regularized_gamma_q(double a, double x)
{
    if (!(a > 0.0)) throw std::domain_error("regularized_gamma_q: a must be positive");
    if (!(x >= 0.0)) throw std::domain_error("regularized_gamma_q: x must be non-negative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        return 1.0 - std::exp(a * std::log(x) - x - ln_gamma(a)) * lower_gamma_series(a, x);
    }
    return std::exp(-x - ln_gamma(a)) * gamma_cf_scaled(a, x);
}

SignedLog log_kummer_1f1(double a, double b, double x, const SeriesControl& ctl)
{
    ctl.validate();
    if (is_nonpositive_integer(b)) throw std::domain_error("kummer_1f1: b is a non-positive integer");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(x)) {
        throw std::domain_error("kummer_1f1: non-finite argument");
    }
    auto positive = [&](double aa, double z) {
        if (auto r = log_asymptotic_1f1(aa, b, z, ctl)) return *r;
        return log_series_1f1(aa, b, z, ctl);
    };
    if (x >= 0.0) return positive(a, x);
    // 1F1(a; b; x) = e^x 1F1(b - a; b; -x)
    SignedLog r = positive(b - a, -x);
    r.log_abs += x;
    return r;
}

double kummer_1f1(double a, double b, double x, const SeriesControl& ctl)
{
    return log_kummer_1f1(a, b, x, ctl).value();
}

SignedLog log_phi2(double b1, double b2, double c, double x, double y, const SeriesControl& ctl)
{
    ctl.validate();
    if (is_nonpositive_integer(c)) throw std::domain_error("phi2: c is a non-positive integer");
    if (!std::isfinite(x) || !std::isfinite(y)) throw std::domain_error("phi2: non-finite argument");

    if (x == 0.0 && y == 0.0) return {0.0, 1};

    // Both arguments negative: Phi2(b1,b2;c;x,y) = e^x Phi2(c-b1-b2, b2; c; -x, y-x),
    // applied on the more negative side so that both new arguments are >= 0.
    if (x < 0.0 && y < 0.0) {
        if (x <= y) {
            SignedLog r = log_phi2(c - b1 - b2, b2, c, -x, y - x, ctl);
            r.log_abs += x;
            return r;
        }
        SignedLog r = log_phi2(b1, c - b1 - b2, c, x - y, -y, ctl);
        r.log_abs += y;
        return r;
    }
    // The outer series runs over the non-negative argument.
    if (y < 0.0) {
        std::swap(b1, b2);
        std::swap(x, y);
    }
    if (y == 0.0 || b2 == 0.0) return log_kummer_1f1(b1, c, x, ctl);

    const double log_y = std::log(y);
    const double log_tol = std::log(ctl.rel_tol);
    LogAccumulator acc;
    double log_outer = 0.0;
    int outer_sign = 1;
    for (int q = 0; q < ctl.max_terms; ++q) {
        if (q > 0) {
            double num = b2 + q - 1;
            if (num == 0.0) return acc.result();
            double den = (c + q - 1) * q;
            log_outer += std::log(std::abs(num)) + log_y - std::log(std::abs(den));
            if ((num < 0.0) != (den < 0.0)) outer_sign = -outer_sign;
        }
        SignedLog inner = log_kummer_1f1(b1, c + q, x, ctl);
        double log_term = log_outer + inner.log_abs;
        acc.add(log_term, outer_sign * inner.sign);

        const double qq = q;
        if (qq > -b2 && qq > -c && qq >= y) {
            double r = y / (qq + 1.0) * std::max(1.0, (b2 + qq) / (c + qq));
            double log_bound = log_outer + std::max(0.0, inner.log_abs);
            if (r < 1.0 && log_bound + std::log(r / (1.0 - r)) < acc.log_abs() + log_tol) {
                return acc.result();
            }
        }
    }
    throw ConvergenceError("phi2: term cap reached before tolerance", acc.result().value());
}

double phi2(double b1, double b2, double c, double x, double y, const SeriesControl& ctl)
{
    return log_phi2(b1, b2, c, x, y, ctl).value();
}

double log_moment_integral(int n, double a)
{
    if (n < 1) throw std::domain_error("log_moment_integral: n must be >= 1");
    if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("log_moment_integral: a must be positive");
    double sum = 0.0;
    double a_pow = 1.0;
    for (int k = 1; k <= n; ++k) {
        a_pow *= a;
        sum += upper_incomplete_gamma_scaled(static_cast<double>(k - n), a) / a_pow;
    }
    return std::exp(ln_gamma(static_cast<double>(n))) * sum;
}

} // namespace kms::specfun
