#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "profiles.hpp"
#include "rng.hpp"

namespace heatpole {

struct McConfig {
    PoleConfig pole = PoleConfig::origin(1);
    std::optional<std::vector<double>> x0; // default: the pole (plus) or the centered origin x = -2 tau gamma (minus)
    std::optional<double> tau;             // default: the profile window edge
    double level_ratio = 0.5;
    int levels = 40;
    int paths = 10000;
    std::uint64_t seed = 7;
    int windows = 3;
    int threads = 1;
};

// Exact conditional law of the bridge pinned at (gamma, 0): x at t_next < t.
template <class Rng>
void bridge_step(std::vector<double>& x, double t, double t_next, const PoleConfig& cfg, Rng& rng)
{
    if (!(t_next > 0.0 && t_next < t)) throw DomainError("bridge step needs 0 < t_next < t");
    double a = t_next / t;
    double sd = std::sqrt(2.0 * t_next * (t - t_next) / t);
    for (size_t i = 0; i < x.size(); ++i) x[i] = cfg.gamma[i] + a * (x[i] - cfg.gamma[i]) + sd * rng.normal();
}

// h-tilde process toward t = -inf: x + 2 t gamma has independent increments of variance 2 dt.
template <class Rng>
void drifted_step(std::vector<double>& x, double t, double t_next, const PoleConfig& cfg, Rng& rng)
{
    if (!(t_next < t && t < 0.0)) throw DomainError("drifted step needs t_next < t < 0");
    double d = t - t_next;
    double sd = std::sqrt(2.0 * d);
    for (size_t i = 0; i < x.size(); ++i) x[i] = x[i] + 2.0 * cfg.gamma[i] * d + sd * rng.normal();
}

// Radial coordinate relative to the moving center: |x - gamma| (plus), |x + 2 t gamma| (minus).
inline double radial_part(const std::vector<double>& x, double t, const PoleConfig& cfg)
{
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double c = cfg.side == Side::Plus ? x[i] - cfg.gamma[i] : x[i] + 2.0 * t * cfg.gamma[i];
        s += c * c;
    }
    return std::sqrt(s);
}

struct LevelSchedule {
    std::vector<double> t; // t[0] = tau, t[j] for levels j = 1..J
};

inline LevelSchedule level_schedule(double tau, double ratio, int levels, Side side)
{
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("level ratio must lie in (0,1)");
    if (levels < 1) throw DomainError("need at least one level");
    if (levels * -std::log(ratio) > 40.0 * std::numbers::ln2 * (1.0 + 1e-12))
        throw DomainError("levels * |log ratio| exceeds the 2^-40 span of the level grid");
    if (side == Side::Plus && !(tau > 0.0)) throw DomainError("plus-side start time must be positive");
    if (side == Side::Minus && !(tau < 0.0)) throw DomainError("minus-side start time must be negative");
    LevelSchedule s;
    s.t.resize(static_cast<size_t>(levels) + 1);
    for (int j = 0; j <= levels; ++j)
        s.t[static_cast<size_t>(j)] = side == Side::Plus ? tau * std::pow(ratio, j) : tau / std::pow(ratio, j);
    return s;
}

struct PathSet {
    PoleConfig pole;
    std::vector<double> t; // level times, t[0] = start
    int paths = 0;
    // positions[(p * levels_incl_start + j) * dim + i]
    std::vector<double> x;

    size_t count_levels() const { return t.size(); }
    const double* at(int p, size_t j) const
    {
        return &x[(static_cast<size_t>(p) * t.size() + j) * static_cast<size_t>(pole.dim)];
    }
    double* at(int p, size_t j) { return &x[(static_cast<size_t>(p) * t.size() + j) * static_cast<size_t>(pole.dim)]; }
};

namespace detail {

inline std::vector<double> default_start(const McConfig& cfg, double tau)
{
    if (cfg.x0) return *cfg.x0;
    std::vector<double> x(cfg.pole.gamma);
    if (cfg.pole.side == Side::Minus)
        for (auto& v : x) v = -2.0 * tau * v;
    return x;
}

template <class Visit>
void sample_path(const McConfig& cfg, const std::vector<double>& times, const std::vector<double>& x0, int p,
                 Visit&& visit)
{
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(p));
    std::vector<double> x = x0;
    for (size_t j = 1; j < times.size(); ++j) {
        if (cfg.pole.side == Side::Plus) bridge_step(x, times[j - 1], times[j], cfg.pole, rng);
        else drifted_step(x, times[j - 1], times[j], cfg.pole, rng);
        visit(j, x);
    }
}

} // namespace detail

inline PathSet simulate_paths(const McConfig& cfg, double tau)
{
    cfg.pole.validate();
    auto sched = level_schedule(tau, cfg.level_ratio, cfg.levels, cfg.pole.side);
    auto x0 = detail::default_start(cfg, tau);
    if (x0.size() != static_cast<size_t>(cfg.pole.dim)) throw DomainError("start point has the wrong dimension");
    PathSet ps;
    ps.pole = cfg.pole;
    ps.t = sched.t;
    ps.paths = cfg.paths;
    ps.x.assign(static_cast<size_t>(cfg.paths) * ps.t.size() * static_cast<size_t>(cfg.pole.dim), 0.0);
    parallel_for(static_cast<size_t>(cfg.paths), cfg.threads, [&](size_t p) {
        double* s = ps.at(static_cast<int>(p), 0);
        std::copy(x0.begin(), x0.end(), s);
        detail::sample_path(cfg, ps.t, x0, static_cast<int>(p), [&](size_t j, const std::vector<double>& x) {
            std::copy(x.begin(), x.end(), ps.at(static_cast<int>(p), j));
        });
    });
    return ps;
}

// Inserts one level between each pair of consecutive levels (geometric midpoint)
// by Brownian-bridge interpolation, keeping the existing positions. On the
// minus side the interpolation acts on the driftless coordinate x + 2 t gamma.
inline PathSet refine_paths(const PathSet& coarse, std::uint64_t seed)
{
    PathSet fine;
    fine.pole = coarse.pole;
    fine.paths = coarse.paths;
    size_t L = coarse.t.size();
    for (size_t j = 0; j < L; ++j) {
        fine.t.push_back(coarse.t[j]);
        if (j + 1 < L) {
            double m = std::sqrt(coarse.t[j] * coarse.t[j + 1]);
            fine.t.push_back(coarse.t[j] < 0.0 ? -m : m);
        }
    }
    const int N = coarse.pole.dim;
    const auto& g = coarse.pole.gamma;
    bool minus = coarse.pole.side == Side::Minus;
    fine.x.assign(static_cast<size_t>(fine.paths) * fine.t.size() * static_cast<size_t>(N), 0.0);
    for (int p = 0; p < coarse.paths; ++p) {
        PathRng rng(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(p));
        for (size_t j = 0; j < L; ++j) {
            std::copy(coarse.at(p, j), coarse.at(p, j) + N, fine.at(p, 2 * j));
            if (j + 1 == L) break;
            // a: earlier point in path order (larger |t| on plus, smaller |t| on minus)
            double ta = coarse.t[j], tb = coarse.t[j + 1], tm = fine.t[2 * j + 1];
            double span = std::abs(ta - tb);
            double wa = std::abs(tm - tb) / span; // weight on the point at ta
            double var = 2.0 * std::abs(ta - tm) * std::abs(tm - tb) / span;
            double sd = std::sqrt(var);
            const double* xa = coarse.at(p, j);
            const double* xb = coarse.at(p, j + 1);
            double* xm = fine.at(p, 2 * j + 1);
            for (int i = 0; i < N; ++i) {
                double ya = xa[i], yb = xb[i];
                if (minus) {
                    ya += 2.0 * ta * g[static_cast<size_t>(i)];
                    yb += 2.0 * tb * g[static_cast<size_t>(i)];
                }
                double ym = yb + wa * (ya - yb) + sd * rng.normal();
                xm[i] = minus ? ym - 2.0 * tm * g[static_cast<size_t>(i)] : ym;
            }
        }
    }
    return fine;
}

struct LevelStats {
    int j = 0;
    double t = 0.0;
    double l = 0.0;
    int crossing_count = 0;
    int first_crossing_count = 0;
};

struct WindowStats {
    int first_level = 0, last_level = 0;
    int crossings = 0; // paths crossing at least once in the window
    double p_hat = 0.0, lo = 0.0, hi = 0.0;
};

struct CrossingStats {
    std::vector<LevelStats> levels;
    std::vector<WindowStats> windows;
    std::uint64_t seed = 0;
    int paths = 0;
    bool truncated = false;
    std::string warning;
};

// Wilson score interval at z = 1.96.
inline std::pair<double, double> wilson_interval(int k, int n, double z = 1.96)
{
    if (n <= 0) return {0.0, 1.0};
    double p = static_cast<double>(k) / n;
    double z2 = z * z;
    double den = 1.0 + z2 / n;
    double c = (p + z2 / (2.0 * n)) / den;
    double h = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
    return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

namespace detail {

inline std::vector<double> envelope_levels(const Profile& prof, const std::vector<double>& t, int& usable,
                                           std::string& warning)
{
    std::vector<double> l(t.size(), 0.0);
    usable = static_cast<int>(t.size()) - 1;
    for (size_t j = 0; j < t.size(); ++j) {
        try {
            double s = singular_coordinate(prof.side, t[j]);
            if (s <= prof.s_min || s > prof.s_max) throw DomainError("outside the window");
            l[j] = envelope_l(prof, t[j]);
        } catch (const std::exception& e) {
            if (j == 0) throw DomainError(std::string("start time outside the envelope window: ") + e.what());
            usable = static_cast<int>(j) - 1;
            warning = "envelope window exhausted at level " + std::to_string(j) + "; statistics truncated";
            break;
        }
    }
    return l;
}

// Level j in 1..J belongs to window w when J*w/W < j <= J*(w+1)/W.
inline int window_index(int j, int J, int W)
{
    for (int w = 0; w < W; ++w)
        if (j <= J * (w + 1) / W) return w;
    return W - 1;
}

inline void summarize_windows(CrossingStats& st, const std::vector<std::vector<int>>& window_hits, int windows)
{
    int J = static_cast<int>(st.levels.size());
    for (int w = 0; w < windows; ++w) {
        WindowStats ws;
        ws.first_level = 1 + J * w / windows;
        ws.last_level = J * (w + 1) / windows;
        int k = 0;
        for (int p = 0; p < st.paths; ++p) k += window_hits[static_cast<size_t>(w)][static_cast<size_t>(p)];
        ws.crossings = k;
        ws.p_hat = static_cast<double>(k) / st.paths;
        auto [lo, hi] = wilson_interval(k, st.paths);
        ws.lo = lo;
        ws.hi = hi;
        st.windows.push_back(ws);
    }
}

} // namespace detail

// Crossing statistics of r(t_j) >= l(t_j) on an already sampled path set.
inline CrossingStats count_crossings(const PathSet& ps, const Profile& prof, int windows = 3, std::uint64_t seed = 0)
{
    CrossingStats st;
    st.seed = seed;
    st.paths = ps.paths;
    int usable = 0;
    auto l = detail::envelope_levels(prof, ps.t, usable, st.warning);
    st.truncated = usable < static_cast<int>(ps.t.size()) - 1;
    const int N = ps.pole.dim;
    for (int j = 1; j <= usable; ++j) st.levels.push_back({j, ps.t[static_cast<size_t>(j)], l[static_cast<size_t>(j)], 0, 0});
    std::vector<std::vector<int>> hits(static_cast<size_t>(windows), std::vector<int>(static_cast<size_t>(ps.paths), 0));
    for (int p = 0; p < ps.paths; ++p) {
        bool crossed = false;
        for (int j = 1; j <= usable; ++j) {
            const double* x = ps.at(p, static_cast<size_t>(j));
            std::vector<double> v(x, x + N);
            if (radial_part(v, ps.t[static_cast<size_t>(j)], ps.pole) >= l[static_cast<size_t>(j)]) {
                auto& L = st.levels[static_cast<size_t>(j - 1)];
                ++L.crossing_count;
                if (!crossed) ++L.first_crossing_count;
                crossed = true;
                hits[static_cast<size_t>(detail::window_index(j, usable, windows))][static_cast<size_t>(p)] = 1;
            }
        }
    }
    if (usable >= windows) detail::summarize_windows(st, hits, windows);
    return st;
}

inline CrossingStats simulate_crossings(const Profile& prof, const McConfig& cfg)
{
    cfg.pole.validate();
    if (prof.side != cfg.pole.side) throw DomainError("profile and pole configuration are on different sides");
    if (cfg.paths < 1) throw DomainError("need at least one path");
    if (cfg.windows < 1) throw DomainError("need at least one window");
    double tau = cfg.tau ? *cfg.tau : time_from_singular(prof.side, prof.s_min * (1.0 + 1e-12) + 1e-12);
    auto sched = level_schedule(tau, cfg.level_ratio, cfg.levels, cfg.pole.side);
    auto x0 = detail::default_start(cfg, tau);
    if (x0.size() != static_cast<size_t>(cfg.pole.dim)) throw DomainError("start point has the wrong dimension");

    CrossingStats st;
    st.seed = cfg.seed;
    st.paths = cfg.paths;
    int usable = 0;
    auto l = detail::envelope_levels(prof, sched.t, usable, st.warning);
    st.truncated = usable < cfg.levels;
    if (radial_part(x0, tau, cfg.pole) >= l[0]) throw DomainError("start point is not strictly inside the envelope");
    if (usable < cfg.windows) throw DomainError("envelope window admits fewer levels than windows");
    for (int j = 1; j <= usable; ++j)
        st.levels.push_back({j, sched.t[static_cast<size_t>(j)], l[static_cast<size_t>(j)], 0, 0});

    const int W = cfg.windows;
    std::vector<int> window_of(static_cast<size_t>(usable) + 1, 0);
    for (int j = 1; j <= usable; ++j) window_of[static_cast<size_t>(j)] = detail::window_index(j, usable, W);

    std::vector<double> times(sched.t.begin(), sched.t.begin() + usable + 1);
    // per-path records; reduced in index order afterwards
    std::vector<std::vector<unsigned char>> cross(static_cast<size_t>(cfg.paths));
    std::vector<std::vector<int>> hits(static_cast<size_t>(W), std::vector<int>(static_cast<size_t>(cfg.paths), 0));
    parallel_for(static_cast<size_t>(cfg.paths), cfg.threads, [&](size_t p) {
        auto& c = cross[p];
        c.assign(static_cast<size_t>(usable) + 1, 0);
        detail::sample_path(cfg, times, x0, static_cast<int>(p), [&](size_t j, const std::vector<double>& x) {
            if (radial_part(x, times[j], cfg.pole) >= l[j]) {
                c[j] = 1;
                hits[static_cast<size_t>(window_of[j])][p] = 1;
            }
        });
    });
    for (int p = 0; p < cfg.paths; ++p) {
        bool crossed = false;
        for (int j = 1; j <= usable; ++j)
            if (cross[static_cast<size_t>(p)][static_cast<size_t>(j)]) {
                auto& L = st.levels[static_cast<size_t>(j - 1)];
                ++L.crossing_count;
                if (!crossed) ++L.first_crossing_count;
                crossed = true;
            }
    }
    detail::summarize_windows(st, hits, W);
    return st;
}

enum class TrendLabel { UpperClassTrend, LowerClassTrend, Ambiguous };

inline const char* to_string(TrendLabel l)
{
    switch (l) {
    case TrendLabel::UpperClassTrend: return "UpperClassTrend";
    case TrendLabel::LowerClassTrend: return "LowerClassTrend";
    default: return "Ambiguous";
    }
}

struct TrendOptions {
    double p_upper = 0.1; // last-window probability at or below this reads as upper class
    double p_lower = 0.9; // at or above this reads as lower class
};

struct TrendReport {
    TrendLabel label = TrendLabel::Ambiguous;
    double slope = 0.0; // least-squares slope of p_hat against window index
    std::vector<double> p_hat, lo, hi;
    double last_fraction = 0.0;
    std::string rationale;
};

inline TrendReport class_trend(const CrossingStats& st, const TrendOptions& opt = {})
{
    if (st.windows.size() < 3) throw DomainError("class trend needs at least 3 disjoint windows");
    TrendReport r;
    std::vector<double> idx;
    for (size_t w = 0; w < st.windows.size(); ++w) {
        r.p_hat.push_back(st.windows[w].p_hat);
        r.lo.push_back(st.windows[w].lo);
        r.hi.push_back(st.windows[w].hi);
        idx.push_back(static_cast<double>(w));
    }
    double mx = 0, my = 0, n = static_cast<double>(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        mx += idx[i] / n;
        my += r.p_hat[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
        sxx += (idx[i] - mx) * (idx[i] - mx);
        sxy += (idx[i] - mx) * (r.p_hat[i] - my);
    }
    r.slope = sxy / sxx;
    double last = r.p_hat.back();
    r.last_fraction = last;
    bool not_rising = last <= r.hi.front();
    bool not_falling = last >= r.lo.front();
    if (last <= opt.p_upper && not_rising) {
        r.label = TrendLabel::UpperClassTrend;
        r.rationale = "last-window crossing fraction at or below " + std::to_string(opt.p_upper) + " and not rising";
    } else if (last >= opt.p_lower && not_falling) {
        r.label = TrendLabel::LowerClassTrend;
        r.rationale = "last-window crossing fraction at or above " + std::to_string(opt.p_lower) + " and not falling";
    } else {
        r.label = TrendLabel::Ambiguous;
        r.rationale = "last-window crossing fraction " + std::to_string(last) + " between the class thresholds";
    }
    return r;
}

// Minus-side profile matched to a plus-side one through the Appell map:
// t' = -1/(4t), so |log|t'|| = |log t| - log 4.
inline Profile appell_image_profile(const Profile& plus)
{
    if (plus.side != Side::Plus) throw DomainError("Appell image is taken of a plus-side profile");
    Profile m = plus;
    m.side = Side::Minus;
    m.label = "appell(" + plus.label + ")";
    const double shift = 2.0 * std::numbers::ln2;
    auto f = plus.log_rho_s;
    m.log_rho_s = [f, shift](double s) { return f(s + shift); };
    if (plus.dlog_rho_ds) {
        auto g = plus.dlog_rho_ds;
        m.dlog_rho_ds = [g, shift](double s) { return g(s + shift); };
    }
    m.s_min = plus.s_min - shift;
    m.s_max = plus.s_max - shift;
    m.family.reset();
    return m;
}

} // namespace heatpole
