#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "profiles.hpp"

namespace heatpole {

// Uniform grid in y = r/l(t) on [0,1] with M intervals, and a time lattice in
// tau = log t of spacing log(4)/m, so successive n = 4^j runs share nodes.
struct RadialGrid {
    int nodes = 512;
    int steps_per_log4 = 64;

    double dy() const { return 1.0 / nodes; }
    double dtau() const { return 2.0 * std::numbers::ln2 / steps_per_log4; }
    double ratio() const { return std::exp(dtau()); }

    void validate() const
    {
        if (nodes < 32) throw DomainError("radial grid needs M >= 32");
        if (ratio() > 1.2 + 1e-12) throw DomainError("time ratio q must be <= 1.2 (steps per log 4 >= 8)");
    }
};

struct TruncatedProblem {
    Profile profile;
    int dim = 1;
    double log_n = 0.0;
    RadialGrid grid;
    double theta = 1.0; // 1 = backward Euler, 0.5 = Crank-Nicolson
};

struct ProbePoint {
    double y = 0.0;
    double log_t = 0.0;
};

struct SolveOptions {
    std::vector<ProbePoint> probes;
    std::vector<double> snapshot_log_t;
    std::optional<double> log_t_end;
    bool record_trace = true;
    // replaces v = 1 at t = 1/n (verification runs only)
    std::function<double(double y, double log_t)> initial;
};

struct TracePoint {
    double log_t;
    double v0;
};

struct Snapshot {
    double log_t;
    std::vector<double> v;
};

struct SolveResult {
    double log_n = 0.0;
    std::vector<double> y;
    std::vector<TracePoint> trace;
    std::vector<Snapshot> snapshots;
    std::vector<double> probe_values; // aligned with SolveOptions::probes
    double v_min = 1.0, v_max = 0.0;
    int steps = 0;
    int refinements = 0;
};

// Coefficients of the radial h-transformed equation v_t = v_rr + a(r,t) v_r.
struct PdeCoefficients {
    double diffusion;
    double drift;
};

inline PdeCoefficients h_transformed_pde_coefficients(double r, double t, int N)
{
    if (!(t > 0.0)) throw DomainError("h-transformed equation lives at t > 0");
    if (r < 0.0) throw DomainError("radius must be nonnegative");
    if (r == 0.0) return {1.0, 0.0}; // symmetric stencil, v_r(0,t) = 0
    return {1.0, (N - 1) / r - r / t};
}

namespace detail {

struct Tridiagonal {
    std::vector<double> lo, di, up;
    explicit Tridiagonal(size_t n) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}

    // Thomas algorithm; the matrix is an M-matrix, so no pivoting is needed.
    void solve(std::vector<double>& rhs, std::vector<double>& work) const
    {
        size_t n = di.size();
        work.resize(n);
        double beta = di[0];
        rhs[0] /= beta;
        for (size_t i = 1; i < n; ++i) {
            work[i] = up[i - 1] / beta;
            beta = di[i] - lo[i] * work[i];
            rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / beta;
        }
        for (size_t i = n - 1; i-- > 0;) rhs[i] -= work[i + 1] * rhs[i + 1];
    }
};

// Spatial operator at one time level: (L V)_i = a_lo V_{i-1} - (a_lo + a_up) V_i + a_up V_{i+1}.
// Central differences where the cell Peclet number is <= 1, upwind otherwise,
// so both off-diagonal weights are nonnegative.
struct Operator {
    std::vector<double> a_lo, a_up;
    double a0 = 0.0; // ghost-node coefficient at y = 0
};

inline Operator build_operator(const Profile& p, int N, double tau, const std::vector<double>& y, double dy)
{
    double s = -tau;
    double lam = p.lambda(s);
    if (!(lam > 0.0) || !std::isfinite(lam)) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << "envelope undefined at log t = " << tau << " (log rho = " << lam << ")";
        throw DomainError(os.str());
    }
    double ratio = p.lambda_s(s) / lam;
    double D = 1.0 / (4.0 * lam);
    size_t n = y.size();
    Operator op;
    op.a_lo.assign(n, 0.0);
    op.a_up.assign(n, 0.0);
    op.a0 = 2.0 * N * D / (dy * dy);
    double dd = D / (dy * dy);
    for (size_t i = 1; i + 1 < n; ++i) {
        double B = D * (N - 1) / y[i] - 0.5 * y[i] * (1.0 + ratio);
        if (std::abs(B) * dy <= 2.0 * D) {
            op.a_lo[i] = dd - B / (2.0 * dy);
            op.a_up[i] = dd + B / (2.0 * dy);
        } else {
            op.a_lo[i] = dd + std::max(-B, 0.0) / dy;
            op.a_up[i] = dd + std::max(B, 0.0) / dy;
        }
    }
    return op;
}

} // namespace detail

class TruncatedSolver {
public:
    TruncatedSolver(const TruncatedProblem& pb) : pb_(pb)
    {
        if (pb.profile.side != Side::Plus) throw DomainError("truncated problems are posed on the plus side");
        if (pb.dim < 1) throw DomainError("dimension must be >= 1");
        if (!(pb.theta >= 0.0 && pb.theta <= 1.0)) throw DomainError("theta must lie in [0,1]");
        pb.grid.validate();
        M_ = pb.grid.nodes;
        dy_ = pb.grid.dy();
        y_.resize(static_cast<size_t>(M_) + 1);
        for (int i = 0; i <= M_; ++i) y_[static_cast<size_t>(i)] = static_cast<double>(i) / M_;
    }

    SolveResult run(const SolveOptions& opt) const
    {
        const Profile& p = pb_.profile;
        SolveResult res;
        res.log_n = pb_.log_n;
        res.y = y_;
        double tau0 = -pb_.log_n;
        double log_delta = -p.s_min;

        std::vector<double> checkpoints;
        for (const auto& pr : opt.probes) checkpoints.push_back(pr.log_t);
        for (double lt : opt.snapshot_log_t) checkpoints.push_back(lt);
        if (opt.log_t_end) checkpoints.push_back(*opt.log_t_end);
        if (checkpoints.empty()) throw DomainError("nothing to solve for: no probes, snapshots or end time");
        for (double c : checkpoints) {
            if (c > log_delta) throw DomainError("requested time lies beyond the profile window");
            if (c < tau0) throw DomainError("requested time precedes the truncation time 1/n");
        }
        std::sort(checkpoints.begin(), checkpoints.end());
        checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

        std::vector<double> V(y_.size());
        for (size_t i = 0; i < V.size(); ++i) V[i] = opt.initial ? opt.initial(y_[i], tau0) : 1.0;
        res.v_min = *std::min_element(V.begin(), V.end());
        res.v_max = *std::max_element(V.begin(), V.end());

        const double dtau = pb_.grid.dtau();
        double q = tau0 / dtau;
        long long next = static_cast<long long>(std::floor(q)) + 1;
        double tau = tau0;
        if (std::abs(q - std::round(q)) < 1e-9) {
            next = static_cast<long long>(std::round(q)) + 1;
            tau = std::round(q) * dtau;
        }
        if (opt.record_trace) res.trace.push_back({tau, V[0]});

        std::vector<double> snap_wanted = opt.snapshot_log_t;
        auto record = [&](double at) {
            for (size_t k = 0; k < opt.probes.size(); ++k)
                if (opt.probes[k].log_t == at) {
                    if (res.probe_values.size() < opt.probes.size()) res.probe_values.resize(opt.probes.size());
                    res.probe_values[k] = interpolate(V, opt.probes[k].y);
                }
            for (double st : snap_wanted)
                if (st == at) res.snapshots.push_back({at, V});
        };
        if (res.probe_values.size() < opt.probes.size()) res.probe_values.assign(opt.probes.size(), 0.0);

        for (double c : checkpoints) {
            while (tau < c) {
                double node = static_cast<double>(next) * dtau;
                double target = std::min(node, c);
                if (target - tau > 1e-13) step(V, tau, target, res);
                bool at_node = target == node;
                tau = target;
                if (at_node) {
                    ++next;
                    if (opt.record_trace) res.trace.push_back({tau, V[0]});
                }
            }
            record(c);
        }
        return res;
    }

private:
    TruncatedProblem pb_;
    int M_ = 0;
    double dy_ = 0.0;
    std::vector<double> y_;

    double interpolate(const std::vector<double>& V, double y) const
    {
        if (y <= 0.0) return V.front();
        if (y >= 1.0) return V.back();
        double u = y * M_;
        size_t i = static_cast<size_t>(std::floor(u));
        double w = u - static_cast<double>(i);
        if (i >= static_cast<size_t>(M_)) return V.back();
        return (1.0 - w) * V[i] + w * V[i + 1];
    }

    void step(std::vector<double>& V, double ta, double tb, SolveResult& res) const
    {
        const double theta = pb_.theta;
        int sub = 1;
        detail::Operator op_a;
        if (theta < 1.0) {
            op_a = detail::build_operator(pb_.profile, pb_.dim, ta, y_, dy_);
            // explicit weights must stay nonnegative for a monotone step
            double worst = op_a.a0;
            for (size_t i = 1; i + 1 < y_.size(); ++i) worst = std::max(worst, op_a.a_lo[i] + op_a.a_up[i]);
            double d = tb - ta;
            while ((1.0 - theta) * (d / sub) * worst > 1.0) {
                sub *= 2;
                if (sub > (1 << 20)) throw SolverError("time-step refinement failed to restore monotonicity");
            }
            if (sub > 1) res.refinements += 1;
        }
        double h = (tb - ta) / sub;
        for (int k = 0; k < sub; ++k) {
            double t0 = ta + k * h, t1 = (k + 1 == sub) ? tb : ta + (k + 1) * h;
            substep(V, t0, t1, res, k == 0 && theta < 1.0 ? &op_a : nullptr);
        }
    }

    void substep(std::vector<double>& V, double ta, double tb, SolveResult& res, const detail::Operator* pre_a) const
    {
        const double theta = pb_.theta;
        const double d = tb - ta;
        const size_t n = y_.size();
        auto op_b = detail::build_operator(pb_.profile, pb_.dim, tb, y_, dy_);

        std::vector<double> rhs = V;
        if (theta < 1.0) {
            detail::Operator op_a = pre_a ? *pre_a : detail::build_operator(pb_.profile, pb_.dim, ta, y_, dy_);
            double e = (1.0 - theta) * d;
            rhs[0] = V[0] + e * op_a.a0 * (V[1] - V[0]);
            for (size_t i = 1; i + 1 < n; ++i)
                rhs[i] = V[i] + e * (op_a.a_lo[i] * V[i - 1] - (op_a.a_lo[i] + op_a.a_up[i]) * V[i] +
                                     op_a.a_up[i] * V[i + 1]);
        }
        rhs[n - 1] = 0.0;

        detail::Tridiagonal A(n);
        double w = theta * d;
        A.di[0] = 1.0 + w * op_b.a0;
        A.up[0] = -w * op_b.a0;
        for (size_t i = 1; i + 1 < n; ++i) {
            A.lo[i] = -w * op_b.a_lo[i];
            A.up[i] = -w * op_b.a_up[i];
            A.di[i] = 1.0 + w * (op_b.a_lo[i] + op_b.a_up[i]);
        }
        A.di[n - 1] = 1.0;
        std::vector<double> work;
        A.solve(rhs, work);
        V.swap(rhs);
        ++res.steps;

        auto [mn, mx] = std::minmax_element(V.begin(), V.end());
        res.v_min = std::min(res.v_min, *mn);
        res.v_max = std::max(res.v_max, *mx);
        if (*mn < -1e-8 || *mx > 1.0 + 1e-8) {
            std::ostringstream os;
            os.imbue(std::locale::classic());
            os << "discrete maximum principle violated at log t = " << tb << ": v in [" << *mn << ", " << *mx << "]";
            throw SolverError(os.str());
        }
    }
};

inline SolveResult solve_truncated(const TruncatedProblem& pb, const SolveOptions& opt)
{
    return TruncatedSolver(pb).run(opt);
}

// Level-set domain of h: |x - gamma|^2 < -2 N t log(t/c), 0 < t < c, where h = c' = (4 pi c)^{-N/2}.
inline Profile level_set_domain(double c, int N)
{
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("level-set constant c must be positive");
    if (N < 1) throw DomainError("dimension must be >= 1");
    Profile p;
    p.side = Side::Plus;
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "level-set:c=" << c;
    p.label = os.str();
    p.s_min = -std::log(c);
    double logc = std::log(c);
    p.log_rho_s = [N, logc](double s) { return 0.5 * N * (s + logc); };
    p.dlog_rho_ds = [N](double) { return 0.5 * N; };
    p.level_set_c = c;
    return p;
}

inline double level_set_log_c_prime(double c, int N) { return -0.5 * N * std::log(4.0 * std::numbers::pi * c); }

// (h - c')/h at radius r from the pole and time t, through the kernel.
inline double level_set_measure_value(double c, int N, double r, double t)
{
    if (!(t > 0.0 && t < c)) throw DomainError("level-set domain is empty for t >= c");
    std::vector<double> x(static_cast<size_t>(N), 0.0);
    x[0] = r;
    return -std::expm1(level_set_log_c_prime(c, N) - log_heat_kernel(x, t));
}

// Large constant envelope l = R standing in for the whole upper half-space.
inline Profile halfspace_profile(double R = 1e3)
{
    if (!(R > 0.0)) throw DomainError("half-space radius must be positive");
    Profile p;
    p.side = Side::Plus;
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "halfspace:r=" << R;
    p.label = os.str();
    double a = R * R / 4.0;
    p.s_min = -std::log(a) + 1.0; // window t < a/e keeps log rho > e
    p.s_max = 700.0;
    p.log_rho_s = [a](double s) { return a * std::exp(s); };
    p.dlog_rho_ds = [a](double s) { return a * std::exp(s); };
    return p;
}

enum class MeasureVerdict { NullMeasure, PositiveMeasure, Undecided };

inline const char* to_string(MeasureVerdict v)
{
    switch (v) {
    case MeasureVerdict::NullMeasure: return "NullMeasure";
    case MeasureVerdict::PositiveMeasure: return "PositiveMeasure";
    default: return "Undecided";
    }
}

struct MeasureOptions {
    std::vector<double> log_n; // increasing; default 4^j
    ProbePoint probe{0.0, std::log(1e-4)};
    RadialGrid grid{256, 8};
    double theta_null = 0.05;
    double theta_pos = 0.1;
    double cauchy_gap = 0.01;
    double decay_ratio = 0.95;
    int decay_window = 3;
    double eta_pos = 0.5;
    double monotone_tol = 1e-6;
    int threads = 1;
    bool keep_traces = false;

    static std::vector<double> powers_of_four(int j_min, int j_max)
    {
        std::vector<double> v;
        for (int j = j_min; j <= j_max; ++j) v.push_back(j * 2.0 * std::numbers::ln2);
        return v;
    }
};

struct MeasureEstimate {
    std::vector<double> log_n;
    std::vector<double> values;
    std::vector<double> decrements;
    double limit = 0.0;
    std::string extrapolation; // converged | geometric | power | none
    double decrement_exponent = std::numeric_limits<double>::quiet_NaN();
    double geometric_ratio = std::numeric_limits<double>::quiet_NaN();
    double last_gap = 0.0;
    MeasureVerdict verdict = MeasureVerdict::Undecided;
    std::string rationale;
    MeasureOptions options;
    std::vector<SolveResult> runs;
    std::optional<double> far_field_log_bound;
};

namespace detail {

inline std::string fmtd(double v)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(6);
    os << v;
    return os.str();
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double n = static_cast<double>(x.size()), mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

} // namespace detail

// Applies the verdict rules to a computed sequence v_n(probe).
inline void decide_measure(MeasureEstimate& est)
{
    const auto& o = est.options;
    const auto& v = est.values;
    const auto& ln = est.log_n;
    size_t m = v.size();
    est.decrements.clear();
    for (size_t j = 1; j < m; ++j) {
        double d = v[j - 1] - v[j];
        if (d < -o.monotone_tol)
            throw ConsistencyError("v_n(probe) increased from " + detail::fmtd(v[j - 1]) + " to " + detail::fmtd(v[j]) +
                                   " between log n = " + detail::fmtd(ln[j - 1]) + " and " + detail::fmtd(ln[j]));
        est.decrements.push_back(std::max(d, 0.0));
    }
    double vl = v.back();
    est.last_gap = est.decrements.empty() ? 0.0 : est.decrements.back();

    // extrapolation of the remaining decrease
    const auto& d = est.decrements;
    est.limit = vl;
    est.extrapolation = "none";
    if (!d.empty() && d.back() <= 1e-12) {
        est.extrapolation = "converged";
    } else if (d.size() >= 3) {
        size_t k = d.size();
        double r = 0.0;
        bool geometric = true;
        for (size_t i = k - 2; i < k; ++i) {
            if (!(d[i - 1] > 0.0)) {
                geometric = false;
                break;
            }
            double ri = d[i] / d[i - 1];
            r = std::max(r, ri);
            if (ri > 0.9) geometric = false;
        }
        size_t w = std::min<size_t>(8, k);
        std::vector<double> xs, ys;
        for (size_t i = k - w; i < k; ++i)
            if (d[i] > 0.0) {
                xs.push_back(std::log(ln[i + 1]));
                ys.push_back(std::log(d[i]));
            }
        if (xs.size() >= 3) est.decrement_exponent = -detail::fit_slope(xs, ys);
        if (geometric) {
            est.geometric_ratio = r;
            est.limit = vl - d.back() * r / (1.0 - r);
            est.extrapolation = "geometric";
        } else if (est.decrement_exponent > 1.0) {
            double p = est.decrement_exponent;
            double ds = ln[m - 1] - ln[m - 2];
            est.limit = vl - d.back() * ln[m - 1] / ((p - 1.0) * ds);
            est.extrapolation = "power";
        }
        est.limit = std::max(est.limit, 0.0);
    }

    bool sustained = d.size() >= static_cast<size_t>(o.decay_window);
    if (sustained)
        for (size_t j = m - static_cast<size_t>(o.decay_window); j < m; ++j)
            if (!(v[j] <= o.decay_ratio * v[j - 1])) sustained = false;

    bool decay_fast = est.extrapolation == "converged" || est.extrapolation == "geometric" ||
                      (est.extrapolation == "power" && est.decrement_exponent >= 1.0 + o.eta_pos);
    if (vl < o.theta_null) {
        est.verdict = MeasureVerdict::NullMeasure;
        est.rationale = "v_n(probe) = " + detail::fmtd(vl) + " below theta_null";
    } else if (sustained) {
        est.verdict = MeasureVerdict::NullMeasure;
        est.rationale = "sustained decay: v_{4n}/v_n <= " + detail::fmtd(o.decay_ratio) + " over the last " +
                        std::to_string(o.decay_window) + " doublings";
    } else if (m >= 2 && est.last_gap <= o.cauchy_gap && decay_fast && est.limit >= o.theta_pos) {
        est.verdict = MeasureVerdict::PositiveMeasure;
        est.rationale = "Cauchy gap " + detail::fmtd(est.last_gap) + " with " + est.extrapolation +
                        " decrement decay; extrapolated limit " + detail::fmtd(est.limit) + " >= theta_pos";
    } else {
        est.verdict = MeasureVerdict::Undecided;
        est.rationale = "last value " + detail::fmtd(vl) + ", gap " + detail::fmtd(est.last_gap) +
                        ", decrement exponent " + detail::fmtd(est.decrement_exponent) + ", extrapolation " +
                        est.extrapolation + ", limit " + detail::fmtd(est.limit);
    }
}

inline MeasureEstimate estimate_h_measure(const Profile& p, int N, const MeasureOptions& opt)
{
    MeasureEstimate est;
    est.options = opt;
    double s_probe = -opt.probe.log_t;
    if (s_probe <= p.s_min) throw DomainError("probe time lies outside the profile window");
    for (double ln : opt.log_n)
        if (ln > s_probe) est.log_n.push_back(ln);
    if (est.log_n.size() < 2) throw DomainError("n-schedule needs at least two entries with 1/n below the probe time");
    for (size_t j = 1; j < est.log_n.size(); ++j)
        if (!(est.log_n[j] > est.log_n[j - 1])) throw DomainError("n-schedule must be increasing");

    std::vector<SolveResult> runs(est.log_n.size());
    parallel_for(runs.size(), opt.threads, [&](size_t j) {
        TruncatedProblem pb{p, N, est.log_n[j], opt.grid, 1.0};
        SolveOptions so;
        so.probes = {opt.probe};
        so.record_trace = opt.keep_traces;
        runs[j] = solve_truncated(pb, so);
    });
    for (const auto& r : runs) est.values.push_back(r.probe_values.at(0));
    if (opt.keep_traces) est.runs = std::move(runs);
    if (p.label.rfind("halfspace", 0) == 0) est.far_field_log_bound = -p.lambda(s_probe);
    decide_measure(est);
    return est;
}

struct OrderEntry {
    double log_n;
    ProbePoint probe; // y relative to the small envelope
    double v_small, v_big;
    bool ok;
};

struct OrderReport {
    std::vector<OrderEntry> entries;
    double tolerance = 0.0;
    double max_excess = -std::numeric_limits<double>::infinity(); // max of v_small - v_big
    bool passed = true;
};

// Solves both problems on the same lattice and compares v at the same physical
// point r = y * l_small(t), which sits at y * l_small/l_big in the larger domain.
inline OrderReport order_preservation_check(const Profile& small, const Profile& big, int N,
                                            const std::vector<double>& log_n, const std::vector<ProbePoint>& probes,
                                            RadialGrid grid = {256, 16}, double tol = 1e-4, int threads = 1)
{
    OrderReport rep;
    rep.tolerance = tol;
    double s_lo = std::max(small.s_min, big.s_min);
    for (const auto& pr : probes) {
        if (-pr.log_t <= s_lo) throw DomainError("probe time outside the shared window");
    }
    // nesting precondition on the sampled shared window
    for (double ln : log_n) {
        for (int k = 0; k <= 32; ++k) {
            double s_end = std::numeric_limits<double>::infinity();
            for (const auto& pr : probes) s_end = std::min(s_end, -pr.log_t);
            double s = s_end + (ln - s_end) * k / 32.0;
            if (small.lambda(s) > big.lambda(s) * (1.0 + 1e-14))
                throw DomainError("envelopes are not nested: l_small > l_big at log t = " + detail::fmtd(-s));
        }
    }
    struct Pair {
        SolveResult a, b;
        std::vector<ProbePoint> big_probes;
    };
    std::vector<Pair> res(log_n.size());
    parallel_for(log_n.size(), threads, [&](size_t j) {
        SolveOptions sa, sb;
        sa.record_trace = sb.record_trace = false;
        sa.probes = probes;
        for (const auto& pr : probes) {
            double s = -pr.log_t;
            double ratio = std::sqrt(small.lambda(s) / big.lambda(s));
            sb.probes.push_back({pr.y * ratio, pr.log_t});
        }
        res[j].a = solve_truncated({small, N, log_n[j], grid, 1.0}, sa);
        res[j].b = solve_truncated({big, N, log_n[j], grid, 1.0}, sb);
        res[j].big_probes = sb.probes;
    });
    for (size_t j = 0; j < log_n.size(); ++j)
        for (size_t k = 0; k < probes.size(); ++k) {
            double a = res[j].a.probe_values[k], b = res[j].b.probe_values[k];
            bool ok = a <= b + tol;
            rep.entries.push_back({log_n[j], probes[k], a, b, ok});
            rep.max_excess = std::max(rep.max_excess, a - b);
            rep.passed = rep.passed && ok;
        }
    if (!rep.passed)
        throw ConsistencyError("order preservation violated: max excess " + detail::fmtd(rep.max_excess));
    return rep;
}

} // namespace heatpole
