#include "kms/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace kms::quad {

namespace {

// Abscissae and weights of the 21-point Kronrod rule on [-1, 1]; the odd
// entries of kNodes are the 10-point Gauss nodes.
constexpr std::array<double, 11> kNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
};

constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525908926, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
};

constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
};

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Piece
{
    double a;
    double b;
    double value;
    double error;
};

} // namespace

RuleResult kronrod21(const std::function<double(double)>& f, double a, double b)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f_center = f(center);
    double kronrod = f_center * kKronrodWeights[10];
    double gauss = 0.0;
    double abs_sum = std::abs(kronrod);
    std::array<double, 21> values{};
    values[10] = f_center;
    for (int i = 0; i < 10; ++i) {
        const double dx = half * kNodes[i];
        const double lo = f(center - dx);
        const double hi = f(center + dx);
        values[i] = lo;
        values[20 - i] = hi;
        kronrod += kKronrodWeights[i] * (lo + hi);
        abs_sum += kKronrodWeights[i] * (std::abs(lo) + std::abs(hi));
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (lo + hi);
    }
    const double mean = 0.5 * kronrod;
    double asc = kKronrodWeights[10] * std::abs(f_center - mean);
    for (int i = 0; i < 10; ++i) {
        asc += kKronrodWeights[i] * (std::abs(values[i] - mean) + std::abs(values[20 - i] - mean));
    }

    // QUADPACK-style error estimate.
    const double res_abs = abs_sum * std::abs(half);
    const double res_asc = asc * std::abs(half);
    double err = std::abs((kronrod - gauss) * half);
    if (res_asc != 0.0 && err != 0.0) {
        err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    }
    if (res_abs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
        err = std::max(50.0 * kEps * res_abs, err);
    }
    return {kronrod * half, gauss * half, err};
}

Outcome integrate(const std::function<double(double)>& f, std::span<const double> breaks,
                  double abs_tol, double rel_tol, int max_intervals)
{
    if (breaks.size() < 2) throw std::invalid_argument("integrate: need at least two breakpoints");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw std::invalid_argument("integrate: tolerances must be positive");

    auto by_error = [](const Piece& x, const Piece& y) { return x.error < y.error; };
    std::vector<Piece> heap;
    heap.reserve(static_cast<std::size_t>(std::max<int>(max_intervals, static_cast<int>(breaks.size()))) + 1);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        RuleResult r = kronrod21(f, breaks[i], breaks[i + 1]);
        heap.push_back({breaks[i], breaks[i + 1], r.kronrod, r.error});
    }
    std::make_heap(heap.begin(), heap.end(), by_error);

    auto totals = [&heap]() {
        double value = 0.0;
        double error = 0.0;
        for (const Piece& p : heap) {
            value += p.value;
            error += p.error;
        }
        return std::pair{value, error};
    };

    Outcome out;
    while (true) {
        auto [value, error] = totals();
        out.value = value;
        out.abs_error = error;
        out.intervals = static_cast<int>(heap.size());
        if (error <= std::max(abs_tol, rel_tol * std::abs(value))) {
            out.converged = true;
            return out;
        }
        if (static_cast<int>(heap.size()) >= max_intervals) return out;

        std::pop_heap(heap.begin(), heap.end(), by_error);
        Piece worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in double precision.
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), by_error);
            return out;
        }
        RuleResult left = kronrod21(f, worst.a, mid);
        RuleResult right = kronrod21(f, mid, worst.b);
        heap.push_back({worst.a, mid, left.kronrod, left.error});
        std::push_heap(heap.begin(), heap.end(), by_error);
        heap.push_back({mid, worst.b, right.kronrod, right.error});
        std::push_heap(heap.begin(), heap.end(), by_error);
    }
}

} // namespace kms::quad
