#include "kms/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "kms/seeding.hpp"

namespace kms::mc {

namespace {

struct Tally
{
    std::uint64_t n = 0;
    double cs_sum = 0.0;
    double cs_sq_sum = 0.0;
    std::uint64_t outage = 0;
    std::uint64_t outage_lower = 0;
    std::uint64_t positive = 0;

    void merge(const Tally& o)
    {
        n += o.n;
        cs_sum += o.cs_sum;
        cs_sq_sum += o.cs_sq_sum;
        outage += o.outage;
        outage_lower += o.outage_lower;
        positive += o.positive;
    }
};

std::uint64_t share(std::uint64_t total, int workers, int w)
{
    const auto W = static_cast<std::uint64_t>(workers);
    const auto idx = static_cast<std::uint64_t>(w);
    return total / W + (idx < total % W ? 1 : 0);
}

MetricResult proportion(std::uint64_t hits, std::uint64_t n)
{
    const double nn = static_cast<double>(n);
    // Standard error from the add-one estimate so that 0/n and n/n do not
    // report a zero spread.
    const double smoothed = (static_cast<double>(hits) + 1.0) / (nn + 2.0);
    return {static_cast<double>(hits) / nn, Method::monte_carlo,
            std::sqrt(smoothed * (1.0 - smoothed) / nn)};
}

McMetrics summarize(const Tally& t)
{
    McMetrics m;
    const double n = static_cast<double>(t.n);
    const double mean = t.cs_sum / n;
    const double var = std::max(0.0, (t.cs_sq_sum - n * mean * mean) / (n - 1.0));
    m.asc = {mean, Method::monte_carlo, std::sqrt(var / n)};
    m.sop = proportion(t.outage, t.n);
    m.sop_lower = proportion(t.outage_lower, t.n);
    m.spsc = proportion(t.positive, t.n);
    // Complement taken from the count of its complement event so that
    // spsc == 1 - sop holds bit-exactly at rs = 0.
    m.spsc.value = 1.0 - static_cast<double>(t.n - t.positive) / n;
    m.n_samples = t.n;
    return m;
}

// Runs worker w and records its tally after each local checkpoint count.
std::vector<Tally> run_worker(const SecrecyScenario& s, const McConfig& c, int w,
                              const std::vector<std::uint64_t>& checkpoints)
{
    std::mt19937_64 eng(derive_stream_seed(c.seed, static_cast<std::uint64_t>(w)));
    ChannelSampler draw_d(s.d_link);
    ChannelSampler draw_e(s.e_link);
    const double theta = s.theta();
    const double gap = theta - 1.0;

    std::vector<Tally> snapshots;
    snapshots.reserve(checkpoints.size());
    Tally t;
    std::size_t next = 0;
    auto record = [&]() {
        while (next < checkpoints.size() && share(checkpoints[next], c.workers, w) == t.n) {
            snapshots.push_back(t);
            ++next;
        }
    };
    record();
    const std::uint64_t total = share(checkpoints.back(), c.workers, w);
    while (t.n < total) {
        const double gd = draw_d(eng);
        const double ge = draw_e(eng);
        const double cs = std::max(std::log1p(gd) - std::log1p(ge), 0.0);
        t.cs_sum += cs;
        t.cs_sq_sum += cs * cs;
        const double scaled = theta * ge;
        // Ties count as outage.
        if (gd <= scaled + gap) ++t.outage;
        if (gd <= scaled) ++t.outage_lower;
        if (gd > ge) ++t.positive;
        ++t.n;
        record();
    }
    return snapshots;
}

std::vector<Checkpoint> drive(const SecrecyScenario& s, const McConfig& c,
                              const std::vector<std::uint64_t>& checkpoints)
{
    std::vector<std::vector<Tally>> per_worker(static_cast<std::size_t>(c.workers));
    if (c.workers == 1) {
        per_worker[0] = run_worker(s, c, 0, checkpoints);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(per_worker.size());
        for (int w = 0; w < c.workers; ++w) {
            pool.emplace_back([&, w]() { per_worker[static_cast<std::size_t>(w)] = run_worker(s, c, w, checkpoints); });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<Checkpoint> out;
    out.reserve(checkpoints.size());
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        Tally merged;
        for (const auto& snaps : per_worker) merged.merge(snaps[k]);
        out.push_back({checkpoints[k], summarize(merged)});
    }
    return out;
}

} // namespace

void McConfig::validate() const
{
    if (n_samples < 1000) throw std::invalid_argument("McConfig: n_samples must be >= 1000");
    if (workers < 1) throw std::invalid_argument("McConfig: workers must be >= 1");
}

const MetricResult& McMetrics::get(Metric m) const
{
    switch (m) {
    case Metric::asc: return asc;
    case Metric::sop: return sop;
    case Metric::sop_lower: return sop_lower;
    case Metric::spsc: return spsc;
    }
    throw std::invalid_argument("unknown metric");
}

McMetrics mc_metrics(const SecrecyScenario& s, const McConfig& c)
{
    c.validate();
    return drive(s, c, {c.n_samples}).front().metrics;
}

std::vector<Checkpoint> mc_convergence(const SecrecyScenario& s, const McConfig& c,
                                       const std::vector<std::uint64_t>& checkpoints)
{
    c.validate();
    if (checkpoints.empty()) throw std::invalid_argument("mc_convergence: no checkpoints");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) || checkpoints.front() < 2 ||
        checkpoints.back() > c.n_samples) {
        throw std::invalid_argument("mc_convergence: checkpoints must be ascending, >= 2 and <= n_samples");
    }
    return drive(s, c, checkpoints);
}

} // namespace kms::mc
