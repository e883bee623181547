#include "kms/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "kms/closed_form.hpp"
#include "kms/monte_carlo.hpp"
#include "kms/secrecy_quadrature.hpp"

namespace kms::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Carries an exit code through the command handlers.
class CliError : public std::runtime_error
{
  public:
    CliError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

  private:
    ExitCode code_;
};

std::string one_line(std::string text)
{
    for (char& ch : text) {
        if (ch == '\n' || ch == '\r' || ch == ',') ch = ';';
    }
    return text;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double parse_number(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

bool is_integer_shape(const LinkShape& l)
{
    auto is_int = [](double v) { return v >= 1.0 && v == std::floor(v); };
    return is_int(l.mu) && is_int(l.m);
}

Metric parse_metric(const std::string& name)
{
    for (Metric m : {Metric::asc, Metric::sop, Metric::sop_lower, Metric::spsc}) {
        if (name == to_string(m)) return m;
    }
    throw CliError(kValidation, "unknown metric '" + name + "'");
}

// "all" expands to every applicable method; closed is skipped for
// non-integer shapes.
std::vector<Method> parse_methods(const std::vector<std::string>& names, bool integer_shapes)
{
    std::vector<Method> out;
    for (const std::string& raw : names) {
        std::stringstream ss(raw);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (name.empty()) continue;
            if (name == "all") {
                if (integer_shapes) out.push_back(Method::closed);
                out.push_back(Method::quadrature);
                out.push_back(Method::monte_carlo);
            } else if (name == "closed") {
                out.push_back(Method::closed);
            } else if (name == "quad") {
                out.push_back(Method::quadrature);
            } else if (name == "mc") {
                out.push_back(Method::monte_carlo);
            } else {
                throw CliError(kValidation, "unknown method '" + name + "'");
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Row evaluate_row(const SweepSpec& spec, double lambda_db, Method method)
{
    Row row;
    row.lambda_db = lambda_db;
    row.metric = spec.metric;
    row.method = method;
    row.result = {kNaN, method, kNaN};
    try {
        const SecrecyScenario s = spec.scenario_at(lambda_db);
        switch (method) {
        case Method::closed:
            row.result = closed::evaluate(spec.metric, s);
            break;
        case Method::quadrature:
            row.result = quadrature::evaluate(spec.metric, s);
            break;
        case Method::monte_carlo: {
            mc::McConfig c{spec.samples, spec.seed, spec.workers};
            row.result = mc::mc_metrics(s, c).get(spec.metric);
            row.n_samples = spec.samples;
            row.seed = spec.seed;
            break;
        }
        }
    } catch (const quadrature::QuadratureError& e) {
        row.result = e.best_estimate();
        row.error = std::string("non_convergence: ") + e.what();
    } catch (const specfun::ConvergenceError& e) {
        row.result.value = e.best_estimate();
        row.error = std::string("non_convergence: ") + e.what();
    } catch (const NonIntegerShapeError& e) {
        row.error = std::string("method_mismatch: ") + e.what();
    } catch (const std::exception& e) {
        row.error = std::string("failed: ") + e.what();
    }
    row.error = one_line(row.error);
    return row;
}

// Maps a row error back to an exit code for single-record commands.
ExitCode code_of(const Row& row)
{
    if (row.error.empty()) return kOk;
    if (row.error.rfind("non_convergence", 0) == 0) return kNonConvergence;
    if (row.error.rfind("method_mismatch", 0) == 0) return kMethodMismatch;
    return kValidation;
}

struct Options
{
    std::string scenario_file;
    LinkShape d;
    LinkShape e;
    double gamma_bar_e = 1.0;
    std::string lambda_db = "-10:30:1";
    double rs = 0.0;
    std::vector<std::string> methods{"all"};
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 1;
    int jobs = 1;
    std::string out;
    std::string metric = "spsc";
    int figure = 0;
    bool analytic_only = false;
};

struct Flags
{
    std::vector<CLI::Option*> kappa_d, kappa_e, mu_d, mu_e, m_d, m_e, gamma_bar_e, rs;
};

void add_scenario_flags(CLI::App& cmd, Options& o, Flags& f)
{
    cmd.add_option("--scenario", o.scenario_file, "JSON scenario file; explicit flags take precedence");
    f.kappa_d.push_back(cmd.add_option("--kappa-d", o.d.kappa, "kappa of the main link")->capture_default_str());
    f.mu_d.push_back(cmd.add_option("--mu-d", o.d.mu, "mu of the main link")->capture_default_str());
    f.m_d.push_back(cmd.add_option("--m-d", o.d.m, "m of the main link")->capture_default_str());
    f.kappa_e.push_back(cmd.add_option("--kappa-e", o.e.kappa, "kappa of the eavesdropper link")->capture_default_str());
    f.mu_e.push_back(cmd.add_option("--mu-e", o.e.mu, "mu of the eavesdropper link")->capture_default_str());
    f.m_e.push_back(cmd.add_option("--m-e", o.e.m, "m of the eavesdropper link")->capture_default_str());
    f.rs.push_back(cmd.add_option("--rs", o.rs, "target secrecy rate in nats")->capture_default_str());
}

void add_run_flags(CLI::App& cmd, Options& o, Flags& f)
{
    f.gamma_bar_e.push_back(
        cmd.add_option("--gamma-bar-e", o.gamma_bar_e, "average SNR of the eavesdropper link (linear)")
            ->capture_default_str());
    cmd.add_option("--lambda-db", o.lambda_db, "gbar_D / gbar_E in dB: value or start:stop:step")
        ->capture_default_str();
    cmd.add_option("--samples", o.samples, "Monte Carlo sample pairs")->capture_default_str();
    cmd.add_option("--seed", o.seed, "Monte Carlo seed")->capture_default_str();
    cmd.add_option("--workers", o.workers, "Monte Carlo streams per estimate")->capture_default_str();
    cmd.add_option("--jobs", o.jobs, "rows evaluated concurrently")->capture_default_str();
    cmd.add_option("--out", o.out, "output file (directory for figure); stdout when empty");
}

bool given(const std::vector<CLI::Option*>& opts)
{
    return std::any_of(opts.begin(), opts.end(), [](const CLI::Option* p) { return p->count() > 0; });
}

void apply_scenario_file(Options& o, const Flags& f)
{
    if (o.scenario_file.empty()) return;
    std::ifstream in(o.scenario_file);
    if (!in) throw CliError(kValidation, "cannot open scenario file '" + o.scenario_file + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CliError(kValidation, std::string("bad scenario file: ") + e.what());
    }
    auto take = [&](const nlohmann::json& obj, const char* key, double& dst,
                    const std::vector<CLI::Option*>& flag) {
        if (!obj.is_object() || !obj.contains(key) || given(flag)) return;
        if (!obj[key].is_number()) throw CliError(kValidation, std::string("scenario key '") + key + "' must be a number");
        dst = obj[key].get<double>();
    };
    if (!j.is_object()) throw CliError(kValidation, "scenario file must hold a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "d" && key != "e" && key != "rs" && key != "gamma_bar_e") {
            throw CliError(kValidation, "unknown scenario key '" + key + "'");
        }
    }
    if (j.contains("d")) {
        take(j["d"], "kappa", o.d.kappa, f.kappa_d);
        take(j["d"], "mu", o.d.mu, f.mu_d);
        take(j["d"], "m", o.d.m, f.m_d);
    }
    if (j.contains("e")) {
        take(j["e"], "kappa", o.e.kappa, f.kappa_e);
        take(j["e"], "mu", o.e.mu, f.mu_e);
        take(j["e"], "m", o.e.m, f.m_e);
    }
    take(j, "rs", o.rs, f.rs);
    take(j, "gamma_bar_e", o.gamma_bar_e, f.gamma_bar_e);
}

SweepSpec make_spec(const Options& o)
{
    SweepSpec spec;
    try {
        spec.lambda_db = parse_lambda_grid(o.lambda_db);
    } catch (const std::invalid_argument& e) {
        throw CliError(kValidation, e.what());
    }
    spec.gamma_bar_e = o.gamma_bar_e;
    spec.d = o.d;
    spec.e = o.e;
    spec.rs = o.rs;
    spec.metric = parse_metric(o.metric);
    spec.methods = parse_methods(o.methods, is_integer_shape(o.d) && is_integer_shape(o.e));
    spec.samples = o.samples;
    spec.seed = o.seed;
    spec.workers = o.workers;
    spec.jobs = o.jobs;
    try {
        spec.validate();
    } catch (const NonIntegerShapeError& e) {
        throw CliError(kMethodMismatch, e.what());
    } catch (const std::exception& e) {
        throw CliError(kValidation, e.what());
    }
    return spec;
}

// Output file or the given stream.
class Sink
{
  public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback)
    {
        if (path.empty()) return;
        file_.open(path, std::ios::binary);
        if (!file_) throw CliError(kValidation, "cannot write '" + path + "'");
        out_ = &file_;
    }
    std::ostream& stream() { return *out_; }

  private:
    std::ofstream file_;
    std::ostream* out_;
};

int cmd_rows(const Options& o, std::ostream& out, bool single)
{
    SweepSpec spec = make_spec(o);
    if (single && spec.lambda_db.values().size() != 1) {
        throw CliError(kValidation, "metric takes a single --lambda-db value");
    }
    std::vector<Row> rows = run_sweep(spec);
    Sink sink(o.out, out);
    write_csv(sink.stream(), rows);
    if (!single) return kOk;
    ExitCode worst = kOk;
    for (const Row& r : rows) worst = std::max(worst, code_of(r));
    if (worst != kOk) {
        const auto bad = std::find_if(rows.begin(), rows.end(), [](const Row& r) { return !r.error.empty(); });
        throw CliError(worst, bad->error);
    }
    return kOk;
}

int cmd_figure(const Options& o, std::ostream& out)
{
    if (o.figure < 1 || o.figure > 8) throw CliError(kValidation, "figure must be in 1..8");
    LambdaGrid grid;
    try {
        grid = parse_lambda_grid(o.lambda_db);
    } catch (const std::invalid_argument& e) {
        throw CliError(kValidation, e.what());
    }
    std::vector<FigureCurve> curves;
    try {
        curves = figure_curves(o.figure, grid, o.gamma_bar_e, !o.analytic_only, o.samples, o.seed, o.workers,
                               o.jobs);
    } catch (const std::invalid_argument& e) {
        throw CliError(kValidation, e.what());
    }
    const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw CliError(kValidation, "cannot create '" + dir.string() + "'");
    for (const FigureCurve& c : curves) {
        const std::filesystem::path file = dir / ("fig" + std::to_string(o.figure) + "_" + c.label + ".csv");
        Sink sink(file.string(), out);
        write_csv(sink.stream(), run_sweep(c.spec));
        out << file.string() << '\n';
    }
    return kOk;
}

// Quick agreement check of the three methods on a few scenarios.
int cmd_selftest(std::ostream& out)
{
    struct Case
    {
        LinkShape d, e;
        double lambda_db, rs;
    };
    const Case cases[] = {
        {{3, 2, 2}, {3, 2, 2}, 0.0, 0.0},
        {{1, 1, 2}, {3, 2, 1}, 10.0, 1.0},
        {{0, 4, 5}, {1, 1, 1}, -5.0, 0.5},
    };
    bool all_ok = true;
    int index = 0;
    for (const Case& c : cases) {
        ++index;
        SweepSpec spec;
        spec.d = c.d;
        spec.e = c.e;
        spec.rs = c.rs;
        spec.samples = 200'000;
        spec.seed = 11;
        const SecrecyScenario s = spec.scenario_at(c.lambda_db);
        const mc::McMetrics sim = mc::mc_metrics(s, {spec.samples, spec.seed, 1});
        for (Metric m : {Metric::asc, Metric::sop, Metric::sop_lower, Metric::spsc}) {
            const MetricResult exact = closed::evaluate(m, s);
            const MetricResult quad = quadrature::evaluate(m, s);
            const MetricResult& est = sim.get(m);
            const bool quad_ok = std::abs(exact.value - quad.value) <= std::max(1e-7 * std::abs(exact.value), 1e-9);
            const bool mc_ok = std::abs(exact.value - est.value) <= 4.0 * est.err_est + 1e-12;
            all_ok = all_ok && quad_ok && mc_ok;
            out << "selftest case" << index << ' ' << to_string(m) << " closed=" << fmt(exact.value)
                << " quad=" << fmt(quad.value) << " mc=" << fmt(est.value) << ' '
                << (quad_ok && mc_ok ? "PASS" : "FAIL") << '\n';
        }
    }
    if (!all_ok) throw CliError(kNonConvergence, "selftest disagreement");
    return kOk;
}

} // namespace

void LambdaGrid::validate() const
{
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
        throw std::invalid_argument("lambda grid must be finite");
    }
    if (!(step > 0.0)) throw std::invalid_argument("lambda step must be > 0");
    if (start > stop) throw std::invalid_argument("lambda start must be <= stop");
    if ((stop - start) / step > 1e6) throw std::invalid_argument("lambda grid too long");
}

std::vector<double> LambdaGrid::values() const
{
    validate();
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
    return out;
}

LambdaGrid parse_lambda_grid(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    LambdaGrid g;
    if (parts.size() == 1) {
        g.start = g.stop = parse_number(parts[0]);
    } else if (parts.size() == 3) {
        g.start = parse_number(parts[0]);
        g.stop = parse_number(parts[1]);
        g.step = parse_number(parts[2]);
    } else {
        throw std::invalid_argument("lambda-db must be 'value' or 'start:stop:step'");
    }
    g.validate();
    return g;
}

void SweepSpec::validate() const
{
    lambda_db.validate();
    if (!std::isfinite(gamma_bar_e) || !(gamma_bar_e > 0.0)) throw std::invalid_argument("gamma_bar_e must be > 0");
    if (methods.empty()) throw std::invalid_argument("no method selected");
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    // Range checks of every link and of rs, at the grid's first point.
    (void)scenario_at(lambda_db.start);
    (void)scenario_at(lambda_db.stop);
    if (std::find(methods.begin(), methods.end(), Method::monte_carlo) != methods.end()) {
        mc::McConfig{samples, seed, workers}.validate();
    }
    if (std::find(methods.begin(), methods.end(), Method::closed) != methods.end() &&
        !(is_integer_shape(d) && is_integer_shape(e))) {
        throw NonIntegerShapeError("method closed requires integer mu and m on both links");
    }
}

SecrecyScenario SweepSpec::scenario_at(double lambda) const
{
    const double gamma_bar_d = gamma_bar_e * std::pow(10.0, lambda / 10.0);
    return {d.at(gamma_bar_d), e.at(gamma_bar_e), rs};
}

std::vector<Row> run_sweep(const SweepSpec& spec)
{
    spec.validate();
    const std::vector<double> lambdas = spec.lambda_db.values();
    const std::size_t per = spec.methods.size();
    std::vector<Row> rows(lambdas.size() * per);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            rows[i] = evaluate_row(spec, lambdas[i / per], spec.methods[i % per]);
        }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), rows.size());
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return rows;
}

void write_csv_header(std::ostream& out)
{
    out << "lambda_db,metric,method,value,err_est,n_samples,seed,error\n";
}

void write_csv_row(std::ostream& out, const Row& row)
{
    out << fmt(row.lambda_db) << ',' << to_string(row.metric) << ',' << to_string(row.method) << ','
        << fmt(row.result.value) << ',' << fmt(row.result.err_est) << ',' << row.n_samples << ',' << row.seed
        << ',' << row.error << '\n';
}

void write_csv(std::ostream& out, const std::vector<Row>& rows)
{
    write_csv_header(out);
    for (const Row& r : rows) write_csv_row(out, r);
}

std::vector<FigureCurve> figure_curves(int n, const LambdaGrid& grid, double gamma_bar_e, bool with_mc,
                                       std::uint64_t samples, std::uint64_t seed, int workers, int jobs)
{
    if (n < 1 || n > 8) throw std::invalid_argument("figure must be in 1..8");
    static constexpr Metric kMetric[] = {Metric::asc, Metric::sop, Metric::sop_lower, Metric::spsc};
    static constexpr double kPairs[][2] = {{2.0, 0.5}, {2.0, 3.0}, {4.5, 3.0}, {7.5, 4.5}};
    const bool vary_mu = n % 2 == 1;
    const Metric metric = kMetric[(n - 1) / 2];
    const double rs = (n >= 3 && n <= 6) ? 1.0 : 0.0;

    std::vector<FigureCurve> curves;
    for (const auto& pair : kPairs) {
        SweepSpec spec;
        spec.lambda_db = grid;
        spec.gamma_bar_e = gamma_bar_e;
        spec.metric = metric;
        spec.rs = rs;
        spec.samples = samples;
        spec.seed = seed;
        spec.workers = workers;
        spec.jobs = jobs;
        spec.d = vary_mu ? LinkShape{3.0, pair[0], 2.0} : LinkShape{3.0, 2.0, pair[0]};
        spec.e = vary_mu ? LinkShape{3.0, pair[1], 2.0} : LinkShape{3.0, 2.0, pair[1]};
        const bool integral = is_integer_shape(spec.d) && is_integer_shape(spec.e);
        spec.methods = {integral ? Method::closed : Method::quadrature};
        if (with_mc) spec.methods.push_back(Method::monte_carlo);
        const char* name = vary_mu ? "mu" : "m";
        std::string label = std::string(name) + "D" + fmt(pair[0]) + "_" + name + "E" + fmt(pair[1]);
        curves.push_back({label, spec});
    }
    return curves;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    Options o;
    Flags f;
    CLI::App app{"Secrecy metrics over kappa-mu shadowed fading", "kms_secrecy"};
    app.require_subcommand(1);

    CLI::App* metric = app.add_subcommand("metric", "one metric at one lambda");
    metric->add_option("name", o.metric, "asc | sop | sopl | spsc")->required();
    add_scenario_flags(*metric, o, f);
    add_run_flags(*metric, o, f);
    metric->add_option("--method", o.methods, "closed | quad | mc | all")->delimiter(',')->capture_default_str();
    metric->get_option("--lambda-db")->default_str("0");

    CLI::App* sweep = app.add_subcommand("sweep", "one metric over a lambda grid");
    add_scenario_flags(*sweep, o, f);
    add_run_flags(*sweep, o, f);
    sweep->add_option("--metric", o.metric, "asc | sop | sopl | spsc")->capture_default_str();
    sweep->add_option("--method", o.methods, "closed | quad | mc | all")->delimiter(',')->capture_default_str();

    CLI::App* figure = app.add_subcommand("figure", "data of figure 1..8, one CSV per curve");
    figure->add_option("n", o.figure, "figure number")->required();
    add_run_flags(*figure, o, f);
    figure->add_flag("--analytic-only", o.analytic_only, "skip the Monte Carlo rows");

    CLI::App* selftest = app.add_subcommand("selftest", "cross-check the three methods");
    o.lambda_db.clear();

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return kOk;
        } catch (const CLI::ParseError& e) {
            throw CliError(kValidation, e.what());
        }
        if (o.lambda_db.empty()) o.lambda_db = *metric ? "0" : "-10:30:1";
        if (*metric || *sweep) apply_scenario_file(o, f);
        if (*metric) return cmd_rows(o, out, true);
        if (*sweep) return cmd_rows(o, out, false);
        if (*figure) return cmd_figure(o, out);
        if (*selftest) return cmd_selftest(out);
        throw CliError(kValidation, "no command");
    } catch (const CliError& e) {
        err << "error code=" << e.code() << " reason=" << one_line(e.what()) << '\n';
        return e.code();
    } catch (const std::exception& e) {
        err << "error code=" << kValidation << " reason=" << one_line(e.what()) << '\n';
        return kValidation;
    }
}

} // namespace kms::cli
