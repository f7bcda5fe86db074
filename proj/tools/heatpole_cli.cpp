#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <heatpole/appell_check.hpp>
#include <heatpole/barrier.hpp>
#include <heatpole/bridge_mc.hpp>
#include <heatpole/integral_test.hpp>
#include <heatpole/pde.hpp>
#include <heatpole/profile_spec.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace heatpole;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kInconclusive = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string profile;
    int dim = 1;
    std::string side = "plus";
    std::string gamma;
    std::uint64_t seed = 7;
    int paths = 10000;
    int levels = 40;
    double ratio = 0.5;
    double n_max = 1e120;
    std::string grid = "256,8";
    int threads = 0;
    bool trace = false;
    std::string out;
    // classify
    std::string form = "rho";
    int k_max = 512;
    // solve
    double probe_t = 1e-4;
    double probe_y = 0.0;
    double tol = 0.05;
    // barrier
    double t = 1e-6;
    std::string n = "1e10";
    double off_center = 0.5;
    // appell-check
    int points = 100;
};

std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// n from log n; exact for powers of two
double n_of(double log_n)
{
    double b = log_n / std::log(2.0);
    if (std::abs(b - std::round(b)) < 1e-9) return std::ldexp(1.0, static_cast<int>(std::lround(b)));
    return std::exp(log_n);
}

json jnum(double v)
{
    if (!std::isfinite(v)) return nullptr;
    return v;
}

double parse_double(const std::string& s, const std::string& what)
{
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("bad number for " + what + ": '" + s + "'");
    return v;
}

Side parse_side(const std::string& s)
{
    if (s == "plus") return Side::Plus;
    if (s == "minus") return Side::Minus;
    throw UsageError("--side must be plus or minus");
}

std::vector<double> parse_gamma(const std::string& s, int dim)
{
    if (s.empty()) return std::vector<double>(static_cast<size_t>(dim), 0.0);
    std::vector<double> g;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) g.push_back(parse_double(item, "--gamma"));
    if (g.size() != static_cast<size_t>(dim))
        throw UsageError("--gamma has " + std::to_string(g.size()) + " components, --dim is " + std::to_string(dim));
    return g;
}

RadialGrid parse_grid(const std::string& s)
{
    auto c = s.find(',');
    if (c == std::string::npos) throw UsageError("--grid expects M,m");
    RadialGrid g;
    g.nodes = static_cast<int>(parse_double(s.substr(0, c), "--grid"));
    g.steps_per_log4 = static_cast<int>(parse_double(s.substr(c + 1), "--grid"));
    return g;
}

std::string timestamp()
{
    std::time_t t = std::time(nullptr);
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path out_dir(const Options& o)
{
    if (!o.out.empty()) return o.out;
    if (const char* e = std::getenv("HEATPOLE_OUT"); e && *e) return e;
    return ".";
}

json manifest(const std::string& command, const json& options, const Options& o)
{
    json m;
    m["command"] = command;
    m["options"] = options;
    m["profile"] = o.profile;
    m["seed"] = o.seed;
    m["tool_version"] = kVersion;
    m["timestamp"] = timestamp();
    return m;
}

class Csv {
public:
    Csv(const fs::path& p, const std::vector<std::string>& header) : f_((fs::create_directories(p.parent_path()), p))
    {
        if (!f_) throw std::runtime_error("cannot write " + p.string());
        row_strings(header);
    }
    void row(std::initializer_list<double> v)
    {
        bool first = true;
        for (double x : v) {
            f_ << (first ? "" : ",") << num(x);
            first = false;
        }
        f_ << '\n';
    }

private:
    void row_strings(const std::vector<std::string>& v)
    {
        for (size_t i = 0; i < v.size(); ++i) f_ << (i ? "," : "") << v[i];
        f_ << '\n';
    }
    std::ofstream f_;
};

void emit(const json& doc, const Options& o, const std::string& name)
{
    std::string text = doc.dump(2);
    std::cout << text << '\n';
    fs::path dir = out_dir(o);
    fs::create_directories(dir);
    std::ofstream f(dir / (name + ".json"));
    if (!f) throw std::runtime_error("cannot write " + (dir / (name + ".json")).string());
    f << text << '\n';
}

Profile load_profile(const Options& o)
{
    if (o.profile.empty()) throw UsageError("--profile is required");
    try {
        return resolve_profile(o.profile, parse_side(o.side), o.dim);
    } catch (const dsl::SyntaxError& e) {
        throw UsageError(std::string("profile syntax error: ") + e.what());
    } catch (const ProfileSpecError& e) {
        throw UsageError(std::string("bad profile: ") + e.what());
    } catch (const DomainError& e) {
        throw UsageError(std::string("bad profile: ") + e.what());
    }
}

json profile_json(const Profile& p)
{
    json j;
    j["label"] = p.label;
    j["side"] = to_string(p.side);
    j["s_min"] = jnum(p.s_min);
    j["delta"] = jnum(p.delta());
    return j;
}

json validation_json(const ValidationReport& r)
{
    json a = json::array();
    for (const auto& f : r.findings)
        a.push_back({{"check", f.check}, {"severity", to_string(f.severity)}, {"passed", f.passed}, {"detail", f.detail}});
    return a;
}

int cmd_classify(const Options& o)
{
    Profile p = load_profile(o);
    ClassifyOptions co;
    co.k_max = o.k_max;
    co.threads = o.threads;
    if (o.form == "rho") co.form = IntegrandForm::Rho;
    else if (o.form == "envelope") co.form = IntegrandForm::Envelope;
    else throw UsageError("--form must be rho or envelope");
    Verdict v = classify(p, o.dim, co);

    json opts{{"dim", o.dim}, {"side", o.side}, {"form", o.form}, {"k_max", o.k_max}, {"threads", o.threads},
              {"trace", o.trace}};
    json doc;
    doc["manifest"] = manifest("classify", opts, o);
    doc["profile"] = profile_json(p);
    doc["verdict"] = to_string(v.kind);
    doc["removability"] = removability(v.kind);
    doc["numeric_verdict"] = to_string(v.numeric_kind);
    doc["exact_verdict"] = v.symbolic_kind ? json(to_string(*v.symbolic_kind)) : json(nullptr);
    doc["rationale"] = v.rationale;
    doc["shell_start"] = v.s_start;
    doc["valid_shells"] = v.valid_prefix;
    doc["window"] = {{"k_min", v.k_min}, {"k_max", v.k_max}};
    doc["fit"] = {{"earlier_half", v.fit.earlier_half}, {"later_half", v.fit.later_half}, {"tail", v.fit.tail},
                  {"beta", jnum(v.fit.beta)},           {"ratio", jnum(v.fit.ratio)},       {"eta", jnum(v.fit.eta)}};
    doc["thresholds"] = {{"k_max", co.k_max},        {"window", co.window},   {"tau_d", co.tau_d},
                         {"tau_c", co.tau_c},        {"ratio_max", co.ratio_max}, {"eta_min", co.eta_min},
                         {"beta_min", co.beta_min}};
    doc["margins"] = {{"half_window", v.margins.half_window_margin}, {"half_window_growth", v.margins.half_window_growth},
                      {"harmonic", jnum(v.margins.harmonic_margin)},  {"tail", v.margins.tail_margin},
                      {"ratio", jnum(v.margins.ratio_margin)},        {"power", jnum(v.margins.power_margin)}};
    if (o.trace) {
        Csv csv(out_dir(o) / "classify_shells.csv", {"k", "t_k", "S_k", "tail_sum", "log_S_k", "panels", "valid"});
        auto tails = tail_sums(v.shells);
        for (size_t i = 0; i < v.shells.size(); ++i) {
            const auto& s = v.shells[i];
            csv.row({double(s.k), time_from_singular(p.side, s.s_lo), s.value, tails[i], s.log_value, double(s.panels),
                     s.valid ? 1.0 : 0.0});
        }
    }
    emit(doc, o, "classify");
    return v.kind == VerdictKind::Inconclusive ? kInconclusive : kOk;
}

int cmd_solve(const Options& o)
{
    Profile p = load_profile(o);
    if (p.side != Side::Plus) throw UsageError("solve works on the plus side");
    MeasureOptions mo;
    mo.grid = parse_grid(o.grid);
    mo.grid.validate();
    if (!(o.n_max > 4.0)) throw UsageError("--n-max must exceed 4");
    int jmax = static_cast<int>(std::floor(std::log(o.n_max) / std::log(4.0) + 1e-9));
    mo.log_n = MeasureOptions::powers_of_four(1, jmax);
    if (!(o.probe_t > 0.0 && o.probe_t < 1.0)) throw UsageError("--probe-t must lie in (0,1)");
    if (!(o.probe_y >= 0.0 && o.probe_y < 1.0)) throw UsageError("--probe-y must lie in [0,1)");
    mo.probe = {o.probe_y, std::log(o.probe_t)};
    mo.threads = o.threads;
    mo.keep_traces = o.trace;
    MeasureEstimate est = estimate_h_measure(p, o.dim, mo);

    json opts{{"dim", o.dim},         {"n_max", o.n_max}, {"grid", o.grid},     {"probe_t", o.probe_t},
              {"probe_y", o.probe_y}, {"tol", o.tol},     {"threads", o.threads}, {"trace", o.trace}};
    json doc;
    doc["manifest"] = manifest("solve", opts, o);
    doc["profile"] = profile_json(p);
    doc["verdict"] = to_string(est.verdict);
    doc["rationale"] = est.rationale;
    doc["limit"] = jnum(est.limit);
    doc["extrapolation"] = est.extrapolation;
    doc["last_value"] = est.values.back();
    doc["last_gap"] = est.last_gap;
    doc["decrement_exponent"] = jnum(est.decrement_exponent);
    doc["geometric_ratio"] = jnum(est.geometric_ratio);
    json runs = json::array();
    for (size_t j = 0; j < est.log_n.size(); ++j) runs.push_back({{"n", n_of(est.log_n[j])}, {"log_n", est.log_n[j]}, {"value", est.values[j]}});
    doc["runs"] = runs;
    if (est.far_field_log_bound) doc["far_field_log_bound"] = *est.far_field_log_bound;
    if (p.level_set_c) {
        double r = o.probe_y * envelope_l(p, o.probe_t);
        double exact = level_set_measure_value(*p.level_set_c, o.dim, r, o.probe_t);
        double rel = std::abs(est.limit - exact) / exact;
        doc["closed_form"] = {{"value", exact}, {"relative_error", rel}, {"tolerance", o.tol}, {"within_tolerance", rel <= o.tol}};
    }
    {
        Csv csv(out_dir(o) / "solve_values.csv", {"n", "t_probe", "v"});
        for (size_t j = 0; j < est.log_n.size(); ++j) csv.row({n_of(est.log_n[j]), o.probe_t, est.values[j]});
    }
    if (o.trace) {
        Csv csv(out_dir(o) / "solve_trace.csv", {"n", "t", "v0"});
        for (const auto& r : est.runs)
            for (const auto& tp : r.trace) csv.row({n_of(r.log_n), std::exp(tp.log_t), tp.v0});
    }
    emit(doc, o, "solve");
    return est.verdict == MeasureVerdict::Undecided ? kInconclusive : kOk;
}

int cmd_bridge(const Options& o)
{
    Profile p = load_profile(o);
    McConfig c;
    c.pole = {o.dim, parse_gamma(o.gamma, o.dim), parse_side(o.side)};
    c.paths = o.paths;
    c.levels = o.levels;
    c.level_ratio = o.ratio;
    c.seed = o.seed;
    c.threads = o.threads;
    CrossingStats st = simulate_crossings(p, c);
    TrendReport tr = class_trend(st);

    json opts{{"dim", o.dim},       {"side", o.side},       {"gamma", c.pole.gamma}, {"paths", o.paths},
              {"levels", o.levels}, {"ratio", o.ratio},     {"threads", o.threads},  {"trace", o.trace}};
    json doc;
    doc["manifest"] = manifest("bridge", opts, o);
    doc["profile"] = profile_json(p);
    doc["trend"] = to_string(tr.label);
    doc["rationale"] = tr.rationale;
    doc["slope"] = tr.slope;
    json w = json::array();
    for (const auto& x : st.windows)
        w.push_back({{"first_level", x.first_level}, {"last_level", x.last_level}, {"crossings", x.crossings},
                     {"p_hat", x.p_hat}, {"lo", x.lo}, {"hi", x.hi}});
    doc["windows"] = w;
    doc["truncated"] = st.truncated;
    doc["warning"] = st.warning;
    doc["validation"] = validation_json(validate_profile(p));
    doc["note"] = "crossings are detected at grid levels only, so counts are biased low";
    {
        Csv csv(out_dir(o) / "bridge_levels.csv", {"j", "t", "l", "crossing_count", "first_crossing_count"});
        for (const auto& L : st.levels)
            csv.row({double(L.j), L.t, L.l, double(L.crossing_count), double(L.first_crossing_count)});
    }
    emit(doc, o, "bridge");
    return tr.label == TrendLabel::Ambiguous ? kInconclusive : kOk;
}

int cmd_barrier(const Options& o)
{
    Profile p = load_profile(o);
    if (p.side != Side::Plus) throw UsageError("barrier works on the plus side");
    double n = parse_double(o.n, "--n");
    if (!(n > 0.0)) throw UsageError("--n must be positive");
    BarrierConfig cfg{p, o.dim, std::log(n)};
    double t = o.t;
    if (!(t > 0.0 && std::log(n) > -std::log(t))) throw UsageError("need 1/n < t");
    Verdict v = classify(p, o.dim, {});

    double w0 = eval_w_over_h(t, 0.0, cfg);
    double l = envelope_l(p, t);
    double wr = eval_w_over_h(t, o.off_center * l, cfg);
    double lead = leading_term(t, cfg);
    double near = segment_bound_near(t, cfg), far = tail_bound_far(t, cfg);
    double ratio = w0 / -lead;
    bool pass = false;

    json opts{{"dim", o.dim}, {"t", t}, {"n", o.n}, {"off_center", o.off_center}};
    json doc;
    doc["manifest"] = manifest("barrier", opts, o);
    doc["profile"] = profile_json(p);
    doc["criterion_verdict"] = to_string(v.kind);
    doc["w_over_h"] = w0;
    doc["w_over_h_off_center"] = wr;
    doc["off_center_ratio"] = wr / w0;
    doc["leading_term"] = lead;
    doc["ratio"] = ratio;
    doc["bound_near"] = near;
    doc["bound_far"] = far;
    doc["lower_bound"] = barrier_lower_bound(0.0, t, cfg);
    if (v.kind == VerdictKind::Diverges) {
        pass = std::abs(ratio - 1.0) <= 0.3;
        doc["ratio_in_band"] = pass;
        doc["critical_time"] = nullptr;
    } else {
        CriticalTime ct = critical_time(cfg);
        pass = true;
        doc["critical_time"] = {{"t", ct.t}, {"bound", ct.bound_at_t}, {"at_window_edge", ct.at_window_edge}};
        auto sd = split_diagnostics(cfg, std::min(ct.t, t));
        doc["split"] = {{"L", sd.L},
                        {"L_below_half_dim", sd.l_below_half_dim},
                        {"rho_dominates_log", sd.rho_dominates_log},
                        {"w1_scale", sd.w1_scale},
                        {"sampled_sup_w1_over_h", sd.sampled_sup_w1_over_h}};
    }
    {
        Csv csv(out_dir(o) / "barrier.csv", {"t", "n", "w_over_h", "leading_term", "ratio"});
        csv.row({t, n, w0, lead, ratio});
    }
    emit(doc, o, "barrier");
    return pass ? kOk : kInconclusive;
}

int cmd_appell(const Options& o)
{
    PoleConfig pc{o.dim, parse_gamma(o.gamma, o.dim), Side::Plus};
    AppellCheckOptions ao;
    ao.points = o.points;
    ao.seed = o.seed;
    AppellCheckReport r = appell_identity_suite(pc, ao);
    json opts{{"dim", o.dim}, {"gamma", pc.gamma}, {"points", o.points}};
    json doc;
    doc["manifest"] = manifest("appell-check", opts, o);
    doc["max_rel_forward"] = r.max_rel_forward;
    doc["max_rel_inverse"] = r.max_rel_inverse;
    doc["max_roundtrip"] = r.max_roundtrip;
    doc["residual_rel"] = r.residual_rel;
    doc["residual_rel_half"] = r.residual_rel_half;
    doc["residual_order"] = r.residual_order;
    doc["passed"] = r.passed;
    emit(doc, o, "appell_check");
    return r.passed ? kOk : kFailure;
}

} // namespace

int main(int argc, char** argv)
{
    std::locale::global(std::locale::classic());
    CLI::App app{"heatpole: regularity of the heat-equation pole"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* s, bool with_profile) {
        if (with_profile) s->add_option("--profile", o.profile, "ilog:k=K,eps=E | level-set:c=C | halfspace[:r=R] | expr:TEXT");
        s->add_option("--dim", o.dim, "space dimension N")->check(CLI::PositiveNumber);
        s->add_option("--threads", o.threads, "worker cap (0 = hardware)");
        s->add_option("--out", o.out, "output directory (default $HEATPOLE_OUT or .)");
        s->add_flag("--trace", o.trace, "write trace CSVs");
    };

    auto* c = app.add_subcommand("classify", "criterion integral verdict");
    common(c, true);
    c->add_option("--side", o.side, "plus|minus");
    c->add_option("--form", o.form, "rho|envelope");
    c->add_option("--k-max", o.k_max, "number of dyadic shells");

    auto* s = app.add_subcommand("solve", "truncated Dirichlet problems and the limit at the probe");
    common(s, true);
    s->add_option("--n-max", o.n_max, "largest n in the schedule n = 4^j");
    s->add_option("--grid", o.grid, "M,m: radial intervals and time steps per factor 4");
    s->add_option("--probe-t", o.probe_t, "probe time");
    s->add_option("--probe-y", o.probe_y, "probe radius as a fraction of l(t)");
    s->add_option("--tol", o.tol, "relative tolerance against a closed form");

    auto* b = app.add_subcommand("bridge", "Monte Carlo crossing statistics");
    common(b, true);
    b->add_option("--side", o.side, "plus|minus");
    b->add_option("--gamma", o.gamma, "pole position, comma separated");
    b->add_option("--seed", o.seed);
    b->add_option("--paths", o.paths)->check(CLI::PositiveNumber);
    b->add_option("--levels", o.levels)->check(CLI::PositiveNumber);
    b->add_option("--ratio", o.ratio, "level ratio in (0,1)");

    auto* w = app.add_subcommand("barrier", "barrier w/h and its leading term");
    common(w, true);
    w->add_option("--t", o.t);
    w->add_option("--n", o.n, "truncation n (or inf)");
    w->add_option("--off-center", o.off_center, "off-center radius as a fraction of l(t)");

    auto* a = app.add_subcommand("appell-check", "Appell transform identity suite");
    common(a, false);
    a->add_option("--gamma", o.gamma, "pole position, comma separated");
    a->add_option("--seed", o.seed);
    a->add_option("--points", o.points)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*c) return cmd_classify(o);
        if (*s) return cmd_solve(o);
        if (*b) return cmd_bridge(o);
        if (*w) return cmd_barrier(o);
        return cmd_appell(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kFailure;
    }
}
