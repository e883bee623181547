// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is non-zero when any hard criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kms/channel.hpp"
#include "kms/cli.hpp"
#include "kms/closed_form.hpp"
#include "kms/monte_carlo.hpp"
#include "kms/secrecy_quadrature.hpp"
#include "oracles.hpp"

using namespace kms;

namespace {

constexpr std::array kMetrics{Metric::asc, Metric::sop, Metric::sop_lower, Metric::spsc};

struct Shape
{
    double kappa, mu, m;
    ChannelParams at(double gbar) const { return {kappa, mu, m, gbar}; }
};

std::ostream& operator<<(std::ostream& os, const Shape& s)
{
    return os << "(" << s.kappa << "," << s.mu << "," << s.m << ")";
}

std::vector<Shape> integer_grid()
{
    std::vector<Shape> g;
    for (double k : {0.0, 1.0, 3.0})
        for (double mu : {1.0, 2.0, 4.0})
            for (double m : {1.0, 2.0, 5.0}) g.push_back({k, mu, m});
    return g;
}

double db(double x) { return std::pow(10.0, x / 10.0); }

class Report
{
  public:
    std::ostringstream detail;

    void fail(const std::string& what)
    {
        ok_ = false;
        if (++failures_ <= 10) detail << "  fail: " << what << "\n";
    }
    void check(bool cond, const std::string& what)
    {
        if (!cond) fail(what);
    }
    bool ok() const { return ok_; }
    int failures() const { return failures_; }

  private:
    bool ok_ = true;
    int failures_ = 0;
};

template <class... Parts>
std::string str(const Parts&... parts)
{
    std::ostringstream os;
    os.precision(10);
    (os << ... << parts);
    return os.str();
}

bool within(double got, double want, double rel, double abs)
{
    return std::abs(got - want) <= std::max(rel * std::abs(want), abs);
}

// --- 1 ---------------------------------------------------------------------

void oracle_equivalence(Report& r)
{
    const auto grid = integer_grid();
    int compared = 0;
    double worst = 0.0;
    for (const Shape& d : grid) {
        for (const Shape& e : grid) {
            for (double lam : {-5.0, 5.0, 15.0}) {
                for (double rs : {0.0, 1.0}) {
                    const SecrecyScenario s{d.at(db(lam)), e.at(1.0), rs};
                    for (Metric m : kMetrics) {
                        const double c = closed::evaluate(m, s).value;
                        const double q = quadrature::evaluate(m, s).value;
                        const double scale = std::max(1e-7 * std::abs(q), 1e-9);
                        worst = std::max(worst, std::abs(c - q) / scale);
                        ++compared;
                        r.check(within(c, q, 1e-7, 1e-9), str(to_string(m), " d=", d, " e=", e, " lambda=", lam,
                                                              " rs=", rs, " closed=", c, " quad=", q));
                    }
                }
            }
        }
    }
    r.detail << "  closed vs quad: " << compared << " values, worst |diff|/tolerance " << worst << "\n";

    // Simulation on a pairing that puts every grid shape on both links.
    int sims = 0;
    int outside = 0;
    double worst_z = 0.0;
    std::uint64_t seed = 1000;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Shape& d = grid[i];
        const Shape& e = grid[grid.size() - 1 - i];
        for (double lam : {-5.0, 5.0, 15.0}) {
            for (double rs : {0.0, 1.0}) {
                const SecrecyScenario s{d.at(db(lam)), e.at(1.0), rs};
                const mc::McMetrics sim = mc::mc_metrics(s, {1'000'000, seed++, 1});
                for (Metric m : kMetrics) {
                    const double c = closed::evaluate(m, s).value;
                    const MetricResult& v = sim.get(m);
                    const double z = std::abs(v.value - c) / v.err_est;
                    worst_z = std::max(worst_z, z);
                    ++sims;
                    if (z > 3.0) {
                        ++outside;
                        r.fail(str("mc ", to_string(m), " d=", d, " e=", e, " lambda=", lam, " rs=", rs,
                                   " closed=", c, " mc=", v.value, " z=", z));
                    }
                }
            }
        }
    }
    r.detail << "  mc vs closed: " << sims << " values at 1e6 samples, " << outside
             << " beyond 3 standard errors, largest z " << worst_z << " (nominal two-sided rate 0.27% expects "
             << 0.0027 * sims << ")\n";
}

// --- 2 ---------------------------------------------------------------------

void identities(Report& r)
{
    const auto grid = integer_grid();
    double sopl_gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < grid.size(); j += 4) {
            for (double lam : {-5.0, 5.0, 15.0}) {
                const SecrecyScenario s0{grid[i].at(db(lam)), grid[j].at(1.0), 0.0};
                const SecrecyScenario s1 = s0.with_rate(1.0);
                const std::string where = str(" d=", grid[i], " e=", grid[j], " lambda=", lam);

                const double c_sop0 = closed::sop(s0).value;
                r.check(closed::spsc(s0).value == 1.0 - c_sop0, "closed spsc != 1 - sop" + where);
                const double q_sop0 = quadrature::sop(s0).value;
                r.check(quadrature::spsc(s0).value == 1.0 - q_sop0, "quad spsc != 1 - sop" + where);

                r.check(closed::sop_lower(s1).value <= closed::sop(s1).value, "closed sopl > sop" + where);
                r.check(quadrature::sop_lower(s1).value <= quadrature::sop(s1).value, "quad sopl > sop" + where);

                const double c_low0 = closed::sop_lower(s0).value;
                const double q_low0 = quadrature::sop_lower(s0).value;
                sopl_gap = std::max({sopl_gap, std::abs(c_low0 - c_sop0), std::abs(q_low0 - q_sop0)});
                r.check(c_low0 == c_sop0 && q_low0 == q_sop0, "sopl(0) != sop(0)" + where);
            }
        }
    }
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SecrecyScenario s{grid[seed].at(db(seed - 10.0)), grid[26 - seed].at(1.0), 0.0};
        const mc::McMetrics a = mc::mc_metrics(s, {50'000, seed, 2});
        const mc::McMetrics b = mc::mc_metrics(s.with_rate(0.8), {50'000, seed, 2});
        r.check(a.spsc.value == 1.0 - a.sop.value, str("mc spsc != 1 - sop, seed ", seed));
        r.check(a.sop_lower.value == a.sop.value, str("mc sopl(0) != sop(0), seed ", seed));
        r.check(b.sop_lower.value <= b.sop.value, str("mc sopl > sop, seed ", seed));
    }
    r.detail << "  largest |sopl(0) - sop(0)| " << sopl_gap << "\n";

    double coef_gap = 0.0;
    double weight_gap = 0.0;
    double norm_gap = 0.0;
    double mix_gap = 0.0;
    int branch_small = 0;
    int branch_large = 0;
    for (const Shape& sh : grid) {
        for (double gbar : {0.1, 1.0, 30.0}) {
            const ChannelParams p = sh.at(gbar);
            const DerivedCoeffs c = derive_coeffs(p);
            const double gap = std::abs(c.a_coef - (c.b_coef + c.c_coef)) / c.a_coef;
            coef_gap = std::max(coef_gap, gap);
            r.check(gap <= 4e-16, str("A != B + C for ", sh, " gbar=", gbar));
        }

        const ChannelParams p = sh.at(1.0);
        const MixtureRep rep = mixture_rep(p);
        double sum = 0.0;
        for (const MixtureTerm& t : rep.terms) sum += t.weight;
        weight_gap = std::max(weight_gap, std::abs(sum - 1.0));
        r.check(std::abs(sum - 1.0) <= 1e-12, str("sum of weights ", sum, " for ", sh));
        (sh.mu <= sh.m ? branch_small : branch_large) += 1;

        for (double x = 0.05; x <= 20.0; x *= 1.2) {
            const double f = pdf(p, x);
            const double fm = pdf_mixture(rep, x);
            const double g = cdf(p, x);
            const double gm = cdf_mixture(rep, x);
            const double gap = std::max(std::abs(f - fm) / f, std::abs(g - gm) / g);
            mix_gap = std::max(mix_gap, gap);
            r.check(gap <= 1e-9, str("general vs mixture at ", x, " for ", sh, ": ", f, " ", fm, " ", g, " ", gm));
        }
    }

    std::vector<Shape> shapes = grid;
    shapes.insert(shapes.end(), {{1, 0.5, 0.8}, {3, 3.5, 0.8}, {0, 0.7, 2}, {2, 1.5, 30}, {3, 4.5, 3}});
    for (const Shape& sh : shapes) {
        const ChannelParams p = sh.at(2.0);
        const double mass = oracle::integrate_pieces([&](double x) { return x == 0.0 ? 0.0 : pdf(p, x); },
                                                     oracle::log_grid(1e-6, 400.0, 4));
        norm_gap = std::max(norm_gap, std::abs(mass - 1.0));
        r.check(std::abs(mass - 1.0) <= 1e-8, str("pdf mass ", mass, " for ", sh));
    }
    r.detail << "  A - (B + C) relative " << coef_gap << "; |sum of weights - 1| " << weight_gap
             << "; |pdf mass - 1| " << norm_gap << "\n";
    r.detail << "  general vs mixture relative " << mix_gap << " over " << branch_small << " shapes with mu <= m and "
             << branch_large << " with mu > m\n";
}

// --- 3 ---------------------------------------------------------------------

void scale_invariance(Report& r)
{
    const auto grid = integer_grid();
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Shape& d = grid[i];
        const Shape& e = grid[(i * 7 + 3) % grid.size()];
        for (double lam : {-5.0, 5.0, 15.0}) {
            for (double rs : {0.0, 1.0}) {
                const SecrecyScenario s{d.at(db(lam)), e.at(1.0), rs};
                const SecrecyScenario t{d.at(10.0 * db(lam)), e.at(10.0), rs};
                for (Metric m : {Metric::spsc, Metric::sop_lower}) {
                    const double a = closed::evaluate(m, s).value;
                    const double b = closed::evaluate(m, t).value;
                    const double qa = quadrature::evaluate(m, s).value;
                    const double qb = quadrature::evaluate(m, t).value;
                    worst = std::max({worst, std::abs(a - b), std::abs(qa - qb)});
                    r.check(std::abs(a - b) <= 1e-9 && std::abs(qa - qb) <= 1e-9,
                            str(to_string(m), " d=", d, " e=", e, " lambda=", lam, " rs=", rs));
                }
            }
        }
    }
    for (const Shape& d : std::vector<Shape>{{3, 2, 2}, {1, 0.5, 0.8}, {0, 3.5, 5}}) {
        for (double rs : {0.0, 1.0}) {
            const SecrecyScenario s{d.at(3.0), {2, 1.5, 0.8, 1.0}, rs};
            const SecrecyScenario t{d.at(30.0), {2, 1.5, 0.8, 10.0}, rs};
            for (Metric m : {Metric::spsc, Metric::sop_lower}) {
                const double a = quadrature::evaluate(m, s).value;
                const double b = quadrature::evaluate(m, t).value;
                worst = std::max(worst, std::abs(a - b));
                r.check(std::abs(a - b) <= 1e-9, str("non-integer ", to_string(m), " d=", d, " rs=", rs));
            }
        }
    }
    r.detail << "  largest change under x10 scaling " << worst << "\n";

    const std::size_t n = 100'000;
    const double crit = oracle::ks_critical_1pct(n);
    double worst_ks = 0.0;
    std::uint64_t seed = 500;
    for (double k : {0.0, 1.0, 3.0}) {
        for (double mu : {1.0, 2.0, 3.5}) {
            for (double m : {0.8, 2.0, 5.0}) {
                const ChannelParams p{k, mu, m, 1.0};
                const double d = oracle::ks_statistic(sample(p, seed++, n), [&](double x) { return cdf(p, x); });
                worst_ks = std::max(worst_ks, d / crit);
                r.check(d <= crit, str("KS ", d, " > ", crit, " for (", k, ",", mu, ",", m, ")"));
            }
        }
    }
    r.detail << "  KS at n=" << n << ": largest statistic / 1% critical value " << worst_ks << "\n";
}

// --- 4 ---------------------------------------------------------------------

void reductions(Report& r)
{
    double worst = 0.0;
    for (double mu : {0.7, 1.0, 2.0, 3.5}) {
        for (double m : {0.8, 2.0, 5.0}) {
            for (double gbar : {0.5, 1.0, 4.0}) {
                const ChannelParams p{0.0, mu, m, gbar};
                for (double x = 1e-3 * gbar; x <= 30.0 * gbar; x *= 1.3) {
                    const double f = oracle::gamma_pdf(mu, gbar / mu, x);
                    const double g = oracle::gamma_cdf(mu, gbar / mu, x);
                    const double gap = std::max(std::abs(pdf(p, x) - f) / f, std::abs(cdf(p, x) - g) / g);
                    worst = std::max(worst, gap);
                    r.check(gap <= 1e-9, str("kappa=0 mu=", mu, " m=", m, " gbar=", gbar, " x=", x));
                }
            }
        }
        const ChannelParams p{0.0, 1.0, 3.0, 2.0};
        for (double x : {0.0, 0.1, 1.0, 5.0}) {
            const double f = std::exp(-x / 2.0) / 2.0;
            worst = std::max(worst, std::abs(pdf(p, x) - f) / f);
            r.check(std::abs(pdf(p, x) - f) <= 1e-9 * f, str("exponential at ", x));
        }
    }
    r.detail << "  kappa=0 against Gamma and exponential densities: largest relative gap " << worst << "\n";

    double worst_rice = 0.0;
    for (double k : {0.5, 1.0, 3.0, 10.0}) {
        for (double gbar : {1.0, 5.0}) {
            const ChannelParams p = rician(k, gbar);
            for (int i = 0; i <= 400; ++i) {
                const double x = 10.0 * gbar * i / 400.0;
                const double gap = std::abs(pdf(p, x) - oracle::rician_power_pdf(k, gbar, x));
                worst_rice = std::max(worst_rice, gap);
                r.check(gap <= 1e-4, str("Rician K=", k, " gbar=", gbar, " x=", x, " gap=", gap));
            }
        }
    }
    r.detail << "  Rician surrogate m=" << kMCap << ": largest absolute gap " << worst_rice << "\n";
}

// --- 5 ---------------------------------------------------------------------

struct Curve
{
    std::string label;
    std::vector<cli::Row> rows;
};

std::vector<Curve> figure(int n, const cli::LambdaGrid& grid)
{
    std::vector<Curve> out;
    for (const cli::FigureCurve& c : cli::figure_curves(n, grid, 1.0, false, 1000, 1, 1, 1)) {
        out.push_back({c.label, cli::run_sweep(c.spec)});
    }
    return out;
}

double at(const Curve& c, double lam)
{
    for (const cli::Row& row : c.rows) {
        if (std::abs(row.lambda_db - lam) < 1e-9) return row.result.value;
    }
    throw std::logic_error("lambda not on the grid");
}

void soft(std::ostream& os, const std::string& what, double got, double quoted)
{
    const bool ok = std::abs(got - quoted) <= 0.15 * std::abs(quoted);
    os << "  soft " << (ok ? "match" : "miss ") << "  " << what << ": " << got << " (quoted " << quoted << ")\n";
}

void figures(Report& r)
{
    const cli::LambdaGrid grid = cli::parse_lambda_grid("-10:30:1");
    std::vector<std::vector<Curve>> figs;
    for (int n = 1; n <= 8; ++n) figs.push_back(figure(n, grid));

    int lambda_fail = 0;
    for (int n = 1; n <= 8; ++n) {
        const Metric metric = figs[n - 1][0].rows[0].metric;
        const bool rising = metric == Metric::asc || metric == Metric::spsc;
        for (const Curve& c : figs[n - 1]) {
            for (std::size_t i = 0; i < c.rows.size(); ++i) {
                r.check(c.rows[i].error.empty(), str("fig ", n, " ", c.label, ": ", c.rows[i].error));
                if (i == 0) continue;
                const cli::Row& a = c.rows[i - 1];
                const cli::Row& b = c.rows[i];
                const double tol = a.result.err_est + b.result.err_est;
                const bool ok = rising ? b.result.value >= a.result.value - tol : b.result.value <= a.result.value + tol;
                if (!ok) {
                    ++lambda_fail;
                    r.fail(str("fig ", n, " ", c.label, " not monotone in lambda at ", b.lambda_db));
                }
            }
        }
    }
    r.detail << "  improvement with lambda: " << (lambda_fail == 0 ? "holds" : "violated") << " on all 32 curves\n";

    int bound_fail = 0;
    for (int n : {3, 4}) {
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t i = 0; i < figs[n - 1][c].rows.size(); ++i) {
                const MetricResult& sop = figs[n - 1][c].rows[i].result;
                const MetricResult& low = figs[n + 1][c].rows[i].result;
                if (low.value > sop.value + sop.err_est + low.err_est) {
                    ++bound_fail;
                    r.fail(str("fig ", n + 2, " above fig ", n, " for ", figs[n - 1][c].label));
                }
            }
        }
    }
    r.detail << "  figs 5/6 <= figs 3/4: " << (bound_fail == 0 ? "holds" : "violated") << "\n";

    // Curves are listed with mu (odd figures) or m (even figures) non-decreasing
    // on both links, so each metric should be non-increasing along the list.
    for (int n = 1; n <= 8; ++n) {
        const auto& f = figs[n - 1];
        std::vector<double> broken;
        for (std::size_t i = 0; i < f[0].rows.size(); ++i) {
            for (std::size_t c = 1; c < f.size(); ++c) {
                const MetricResult& a = f[c - 1].rows[i].result;
                const MetricResult& b = f[c].rows[i].result;
                if (b.value > a.value + a.err_est + b.err_est) {
                    broken.push_back(f[c].rows[i].lambda_db);
                    break;
                }
            }
        }
        const std::string metric(to_string(f[0].rows[0].metric));
        if (broken.empty()) {
            r.detail << "  fig " << n << " " << metric << " non-increasing in the fading parameters at every lambda\n";
        } else {
            r.fail(str("fig ", n, " ", metric, " increases with the fading parameters at ", broken.size(),
                       " of 41 lambda values (", broken.front(), " to ", broken.back(), " dB)"));
            r.detail << "  fig " << n << " " << metric << " ordering by fading parameters breaks at "
                     << broken.size() << " of 41 lambda values, " << broken.front() << " to " << broken.back()
                     << " dB\n";
        }
    }

    const auto& f1 = figs[0];
    const auto& f2 = figs[1];
    const auto& f3 = figs[2];
    soft(r.detail, "fig 1 ASC(muE=0.5)/ASC(muE=3) - 1 at muD=2, -5 dB", at(f1[0], -5) / at(f1[1], -5) - 1.0, 0.76);
    soft(r.detail, "fig 1 ASC drop for muD 2 -> 4.5 at muE=3, -5 dB", 1.0 - at(f1[2], -5) / at(f1[1], -5), 0.665);
    soft(r.detail, "fig 2 ASC at mD=2, mE=0.5, -5 dB", at(f2[0], -5), 0.085);
    soft(r.detail, "fig 2 ASC at mD=2, mE=3, -5 dB", at(f2[1], -5), 0.035);
    soft(r.detail, "fig 2 ASC drop for mD 2 -> 4.5 at mE=3, -5 dB", 1.0 - at(f2[2], -5) / at(f2[1], -5), 0.16);
    soft(r.detail, "fig 3 SOP (7.5,4.5) below (4.5,3) at 15 dB", 1.0 - at(f3[3], 15) / at(f3[2], 15), 0.87);
    soft(r.detail, "fig 3 SOP (7.5,4.5) below (2,0.5) at 15 dB", 1.0 - at(f3[3], 15) / at(f3[0], 15), 0.98);
}

// --- 6 ---------------------------------------------------------------------

std::string invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "kms_secrecy");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::to_string(code) + "\n" + out.str() + err.str();
}

std::string slurp_dir(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& p : files) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        all += p.filename().string() + "\n" + ss.str();
    }
    return all;
}

void determinism(Report& r)
{
    const std::vector<std::vector<std::string>> runs{
        {"sweep", "--metric", "asc", "--lambda-db", "-10:30:5", "--mu-d", "1.5", "--samples", "100000", "--seed",
         "42", "--workers", "4", "--jobs", "3"},
        {"sweep", "--metric", "sop", "--rs", "1", "--lambda-db", "0:20:10", "--method", "all", "--samples", "100000",
         "--seed", "7", "--jobs", "2"},
        {"metric", "spsc", "--method", "mc", "--samples", "200000", "--seed", "9", "--workers", "2"},
    };
    std::size_t bytes = 0;
    for (const auto& args : runs) {
        const std::string a = invoke(args);
        const std::string b = invoke(args);
        const std::string c = invoke(args);
        bytes += a.size();
        r.check(a == b && b == c, str("output differs for ", args[0], " ", args[1], " ", args[2]));
    }
    const std::filesystem::path base = std::filesystem::temp_directory_path() / "kms_acceptance";
    std::string first;
    for (int i = 0; i < 2; ++i) {
        const std::filesystem::path dir = base / std::to_string(i);
        std::filesystem::remove_all(dir);
        invoke({"figure", "7", "--out", dir.string(), "--lambda-db", "-10:30:10", "--samples", "50000", "--seed",
                "3", "--workers", "2", "--jobs", "2"});
        const std::string all = slurp_dir(dir);
        bytes += all.size();
        if (i == 0) first = all;
        else r.check(all == first, "figure files differ between runs");
    }
    std::filesystem::remove_all(base);
    r.detail << "  " << bytes << " bytes of output compared across repeated runs\n";
}

} // namespace

int main()
{
    struct Criterion
    {
        const char* name;
        std::function<void(Report&)> run;
    };
    const std::vector<Criterion> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"identities", identities},
        {"scale invariance and sampler fit", scale_invariance},
        {"special-case reductions", reductions},
        {"figure data (monotonicity hard, quoted numbers soft)", figures},
        {"determinism", determinism},
    };
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Report r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].run(r);
        } catch (const std::exception& e) {
            r.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && r.ok();
        std::cout << "C" << i + 1 << " " << criteria[i].name << ": " << (r.ok() ? "PASS" : "FAIL");
        if (!r.ok()) std::cout << " (" << r.failures() << " failing checks)";
        std::cout << " [" << std::lround(secs) << " s]\n" << r.detail.str() << std::flush;
    }
    return all ? 0 : 1;
}
