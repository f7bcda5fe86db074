#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "error.hpp"
#include "integral_test.hpp"
#include "profiles.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace heatpole {

struct BarrierConfig {
    Profile profile;
    int dim = 1;
    double log_n = 0.0; // +inf means n = infinity
    double k_split = 0.01;
    double theta = 1.0 / 65.0;
    int max_panels = 4096;
    double rel_tol = 1e-8;
};

// Mass of (4 pi s)^{-N/2} exp(-|xi|^2/(4s)) over |xi| <= R.
inline double gaussian_ball_mass(double R, double s, int N)
{
    if (R < 0.0 || !(s > 0.0)) throw DomainError("ball mass needs R >= 0 and s > 0");
    if (R == 0.0) return 0.0;
    return gamma_p(0.5 * N, R * R / (4.0 * s));
}

// Same mass for a ball whose center is at distance r from the kernel's center,
// through the noncentral chi-square law of |xi|^2/(2s).
inline double gaussian_ball_mass_offset_general(double R, double r, double s, int N)
{
    if (r == 0.0) return gaussian_ball_mass(R, s, N);
    if (R == 0.0) return 0.0;
    double gap = (r - R) / (2.0 * std::sqrt(s));
    if (r > R && gap * gap > 700.0) return 0.0;
    if (R > r && gap * gap > 700.0 && R * R / (4.0 * s) > 0.5 * N + 60.0) {
        // far inside: complement via the central tail of the nearer sphere is negligible
        return 1.0;
    }
    boost::math::non_central_chi_squared_distribution<double> d(N, r * r / (2.0 * s));
    return boost::math::cdf(d, R * R / (2.0 * s));
}

inline double gaussian_ball_mass_offset(double R, double r, double s, int N)
{
    if (r < 0.0 || R < 0.0 || !(s > 0.0)) throw DomainError("ball mass needs R, r >= 0 and s > 0");
    if (N == 1 && r > 0.0) {
        double q = 2.0 * std::sqrt(s);
        if (r > R) return 0.5 * (std::erfc((r - R) / q) - std::erfc((r + R) / q));
        return 0.5 * (std::erf((R - r) / q) + std::erf((R + r) / q));
    }
    return gaussian_ball_mass_offset_general(R, r, s, N);
}

inline double subparabolic_barrier_u(double r, double t, const Profile& p)
{
    double lam = p.log_rho(t);
    if (!(lam > 0.0)) throw DomainError("barrier needs rho(t) > 1");
    return -std::expm1(r * r / (4.0 * t) - lam);
}

// mu(t) = k / log^2 rho(t)
inline double split_mu(double t, const BarrierConfig& cfg)
{
    double lam = cfg.profile.log_rho(t);
    return cfg.k_split / (lam * lam);
}

namespace detail {

inline void check_barrier(const BarrierConfig& cfg, double t)
{
    if (cfg.profile.side != Side::Plus) throw DomainError("barrier functions live on the plus side");
    if (!(t > 0.0)) throw DomainError("t must be positive");
    if (-std::log(t) <= cfg.profile.s_min) throw DomainError("t lies outside the profile window");
    if (cfg.log_n > cfg.profile.s_max)
        throw DomainError("log n exceeds the range where the profile can be evaluated (|log t| <= " +
                          std::to_string(cfg.profile.s_max) + ")");
}

template <class F>
double integrate_checked(F&& f, double a, double b, const BarrierConfig& cfg, const char* what)
{
    if (!(b > a)) return 0.0;
    int start = std::max(1, static_cast<int>(std::ceil((b - a) / 2.0)));
    start = std::min(start, cfg.max_panels / 2);
    auto r = quad::doubling(f, a, b, cfg.rel_tol, cfg.max_panels, start);
    if (!r.converged) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << what << ": quadrature did not converge on [" << a << ", " << b << "] with " << r.panels << " panels";
        throw SolverError(os.str());
    }
    return r.value;
}

// Integral over [a, b] in sigma = log(1/tau), with b possibly infinite.
template <class F>
double integrate_sigma(F&& f, double a, double b, const BarrierConfig& cfg, const char* what)
{
    if (std::isfinite(b)) return integrate_checked(f, a, b, cfg, what);
    double lo = a, hi = a + 64.0, total = 0.0;
    for (int it = 0; it < 200; ++it) {
        double part = integrate_checked(f, lo, hi, cfg, what);
        total += part;
        if (std::abs(part) <= 1e-14 * std::abs(total)) break;
        if (hi > 1e15) {
            // slowly decaying but convergent tails are accepted at this cutoff
            if (std::abs(part) <= 1e-6 * std::abs(total)) break;
            throw SolverError(std::string(what) + ": integral over an infinite range does not settle (divergent at n = inf)");
        }
        lo = hi;
        hi = 2.0 * hi;
    }
    return total;
}

} // namespace detail

struct WPieces {
    double far = 0.0;  // tau in (1/n, t/2)
    double near = 0.0; // tau in (t/2, t)
    double total() const { return far + near; }
};

// |w/h| split at tau = t/2; both pieces are nonnegative.
inline WPieces w_over_h_pieces(double t, double r, const BarrierConfig& cfg)
{
    detail::check_barrier(cfg, t);
    const Profile& p = cfg.profile;
    const int N = cfg.dim;
    const double log_t = std::log(t);
    const double sig_n = cfg.log_n;
    const double a = 0.5 * N;
    const double off = r * r / (4.0 * t);
    WPieces w;
    if (sig_n <= -log_t) return w;

    auto mass = [&](double tau_lam_R2_over4, double R2, double lag) {
        // R2: squared ball radius 4 tau log rho; lag: t - tau
        if (r == 0.0) return gamma_p(a, tau_lam_R2_over4);
        return gaussian_ball_mass_offset(std::sqrt(R2), r, lag, N);
    };

    // tau = e^{-sigma} in (max(1/n, ...), t/2)
    double sig_hi = sig_n;
    double sig_lo = std::numbers::ln2 - log_t;
    if (sig_hi > sig_lo) {
        auto fa = [&](double sig) {
            double lam = p.lambda(sig);
            double u = sig + log_t;                 // log(t/tau) > 0
            double log_1m = std::log(-std::expm1(-u)); // log(1 - tau/t)
            double log_x = std::log(lam) - u - log_1m; // log of lam / (t/tau - 1)
            // e = a u + log(mass); sigma cancels analytically once u is large
            double e;
            if (r == 0.0) {
                e = a * (std::log(lam) - log_1m) + log_gamma_p_rest_of_log(a, log_x);
            } else {
                double lag = -t * std::expm1(-u); // t - tau
                if (log_x < std::log(1e-8)) {
                    // small ball far from the kernel center: volume times density
                    e = std::log(unit_ball_volume(N)) + a * (std::log(4.0 * lam) + log_t) -
                        a * std::log(4.0 * std::numbers::pi * lag) - r * r / (4.0 * lag);
                } else {
                    e = a * u + std::log(mass(std::exp(log_x), 4.0 * std::exp(-sig) * lam, lag));
                }
            }
            return a * std::exp(e - lam + off);
        };
        w.far = detail::integrate_sigma(fa, sig_lo, sig_hi, cfg, "w/h far segment");
    }

    // tau = t (1 - e^{-nu}), nu in (log 2, nu_max), limited by tau >= 1/n
    double nu_lo = std::numbers::ln2;
    double nu_hi = nu_lo + 45.0;
    if (std::isfinite(sig_n) && sig_n < sig_lo) {
        // 1/n > t/2: the lower end of the time integral sits inside this segment
        double frac = std::exp(-sig_n - log_t); // (1/n)/t
        nu_lo = -std::log1p(-frac);
    }
    auto fb = [&](double nu) {
        double e = std::exp(-nu);
        double one_m = -std::expm1(-nu); // tau / t
        double sig = -log_t - std::log1p(-e);
        double lam = p.lambda(sig);
        double tau = t * one_m;
        double lag = t * e;
        double m = mass(lam * std::expm1(nu), 4.0 * tau * lam, lag);
        return a * std::exp(-(a + 1.0) * std::log(one_m) - nu - lam + off) * m;
    };
    w.near = detail::integrate_checked(fb, nu_lo, nu_hi, cfg, "w/h near segment");
    return w;
}

// w(x,t)/h(x,t) at distance r from the pole; <= 0, and 0 at t = 1/n.
inline double eval_w_over_h(double t, double r, const BarrierConfig& cfg)
{
    return -w_over_h_pieces(t, r, cfg).total();
}

inline double leading_coefficient(int N) { return 0.5 * N / boost::math::tgamma(0.5 * N + 1.0); }

namespace detail {

// integral over sigma in [a, b] of (log rho)^{N/2} / rho, via the criterion integrand
inline double criterion_sigma_integral(const BarrierConfig& cfg, double a, double b)
{
    auto f = [&](double s) { return std::exp(log_criterion_integrand_s(cfg.profile, cfg.dim, s)); };
    return integrate_sigma(f, a, b, cfg, "criterion integral");
}

} // namespace detail

// c_N * int_{1/n}^{t} (log rho)^{N/2} / (tau rho) dtau, c_N = N omega_N / (2 pi^{N/2}).
inline double leading_term(double t, const BarrierConfig& cfg)
{
    detail::check_barrier(cfg, t);
    return leading_coefficient(cfg.dim) * detail::criterion_sigma_integral(cfg, -std::log(t), cfg.log_n);
}

// Same integral cut at t mu(t).
inline double leading_term_split(double t, const BarrierConfig& cfg)
{
    detail::check_barrier(cfg, t);
    double upper = -std::log(t) - std::log(split_mu(t, cfg));
    if (!(cfg.log_n > upper)) throw DomainError("t mu(t) must exceed 1/n");
    return leading_coefficient(cfg.dim) * detail::criterion_sigma_integral(cfg, upper, cfg.log_n);
}

// N 2^{N/2-1} int_{t/2}^{t} dtau / (tau rho)
inline double segment_bound_near(double t, const BarrierConfig& cfg)
{
    detail::check_barrier(cfg, t);
    auto f = [&](double s) { return std::exp(-cfg.profile.lambda(s)); };
    double a = -std::log(t);
    return cfg.dim * std::pow(2.0, 0.5 * cfg.dim - 1.0) * detail::integrate_checked(f, a, a + std::numbers::ln2, cfg, "near bound");
}

// omega_N (N/2) (2/pi)^{N/2} int_{1/n}^{t/2} (log rho)^{N/2} / (tau rho) dtau
inline double tail_bound_far(double t, const BarrierConfig& cfg)
{
    detail::check_barrier(cfg, t);
    const int N = cfg.dim;
    double c = unit_ball_volume(N) * 0.5 * N * std::pow(2.0 / std::numbers::pi, 0.5 * N);
    double a = -std::log(t) + std::numbers::ln2;
    if (!(cfg.log_n > a)) return 0.0;
    return c * detail::criterion_sigma_integral(cfg, a, cfg.log_n);
}

// Lower bound u + w/h for v_n (and for the limit when log_n = inf), valid for
// nonincreasing rho.
inline double barrier_lower_bound(double r, double t, const BarrierConfig& cfg)
{
    return subparabolic_barrier_u(r, t, cfg.profile) + eval_w_over_h(t, r, cfg);
}

struct CriticalTime {
    double t = 0.0;
    double bound_at_t = 0.0;
    bool at_window_edge = false;
};

// Largest t in the window where the n-independent bound on |w(gamma,t)/h| is <= 1/2.
inline CriticalTime critical_time(const BarrierConfig& cfg)
{
    BarrierConfig c = cfg;
    c.log_n = std::numeric_limits<double>::infinity();
    auto bound = [&](double s) {
        double t = std::exp(-s);
        return segment_bound_near(t, c) + tail_bound_far(t, c);
    };
    double s_lo = cfg.profile.s_min * (1.0 + 1e-9) + 1e-9;
    if (bound(s_lo) <= 0.5) return {std::exp(-s_lo), bound(s_lo), true};
    double s_hi = s_lo + 1.0;
    for (int it = 0; it < 200 && bound(s_hi) > 0.5; ++it) s_hi = s_lo + 2.0 * (s_hi - s_lo);
    if (bound(s_hi) > 0.5) throw SolverError("bound on |w/h| never drops below 1/2");
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (s_lo + s_hi);
        (bound(mid) > 0.5 ? s_lo : s_hi) = mid;
    }
    return {std::exp(-s_hi), bound(s_hi), false};
}

struct RatioEntry {
    double t, log_n;
    double w_over_h, leading, ratio;
    double off_center_ratio;
};

struct RatioReport {
    bool applicable = true;
    std::string note;
    std::vector<RatioEntry> entries;
    double band = 0.3;
    double off_center_fraction = 0.5;
    bool ratio_in_band = false;     // last entry
    bool moves_toward_one = false;  // |R - 1| nonincreasing along the schedule
    bool off_center_in_band = false;
    bool passed() const { return applicable && ratio_in_band && moves_toward_one && off_center_in_band; }
};

inline RatioReport asymptotic_ratio_check(const BarrierConfig& cfg, const std::vector<double>& t_schedule,
                                          const std::vector<double>& log_n_schedule, double band = 0.3,
                                          double off_center_fraction = 0.5)
{
    RatioReport rep;
    rep.band = band;
    rep.off_center_fraction = off_center_fraction;
    if (t_schedule.size() != log_n_schedule.size() || t_schedule.empty())
        throw DomainError("t and n schedules must be nonempty and of equal length");
    auto verdict = classify(cfg.profile, cfg.dim);
    if (verdict.kind != VerdictKind::Diverges) {
        rep.applicable = false;
        rep.note = std::string("inapplicable: criterion integral verdict is ") + to_string(verdict.kind);
        return rep;
    }
    for (size_t j = 0; j < t_schedule.size(); ++j) {
        BarrierConfig c = cfg;
        c.log_n = log_n_schedule[j];
        double t = t_schedule[j];
        double w0 = eval_w_over_h(t, 0.0, c);
        double lead = leading_term(t, c);
        double r = off_center_fraction * envelope_l(c.profile, t);
        double wr = eval_w_over_h(t, r, c);
        rep.entries.push_back({t, c.log_n, w0, lead, w0 / -lead, wr / w0});
    }
    const auto& e = rep.entries;
    rep.ratio_in_band = std::abs(e.back().ratio - 1.0) <= band;
    rep.moves_toward_one = true;
    for (size_t j = 1; j < e.size(); ++j)
        if (std::abs(e[j].ratio - 1.0) > std::abs(e[j - 1].ratio - 1.0) + 1e-12) rep.moves_toward_one = false;
    rep.off_center_in_band = true;
    for (const auto& x : e)
        if (std::abs(x.off_center_ratio - 1.0) > band) rep.off_center_in_band = false;
    return rep;
}

struct SplitDiagnostics {
    double L = 0.0;            // sup over the sampled window of -t rho'/rho
    bool l_below_half_dim = false;
    bool rho_dominates_log = false; // rho(t) >= |log t| on the sampled window
    double w1_scale = 0.0;     // (N - 2L)/N
    double sampled_sup_w1_over_h = 0.0;
    int lattice_points = 0;
};

// Sampled (not exact) quantities entering the auxiliary function w1.
inline SplitDiagnostics split_diagnostics(const BarrierConfig& cfg, double t_max, int t_points = 8)
{
    SplitDiagnostics d;
    const Profile& p = cfg.profile;
    double s_a = std::max(p.s_min * (1.0 + 1e-9) + 1e-9, -std::log(t_max));
    double s_b = std::isfinite(cfg.log_n) ? cfg.log_n : s_a + 64.0;
    d.L = -std::numeric_limits<double>::infinity();
    d.rho_dominates_log = true;
    for (int k = 0; k <= 256; ++k) {
        double s = s_a + (s_b - s_a) * k / 256.0;
        d.L = std::max(d.L, p.lambda_s(s));
        if (p.lambda(s) < std::log(s)) d.rho_dominates_log = false;
    }
    d.l_below_half_dim = d.L < 0.5 * cfg.dim;
    d.w1_scale = (cfg.dim - 2.0 * d.L) / cfg.dim;
    for (int k = 0; k < t_points; ++k) {
        double s = s_a + (s_b - s_a) * (k + 0.5) / t_points;
        double t = std::exp(-s);
        double l = envelope_l(p, t);
        for (double f : {0.0, 0.25, 0.5, 0.75, 0.95}) {
            double v = std::abs(d.w1_scale * eval_w_over_h(t, f * l, cfg));
            d.sampled_sup_w1_over_h = std::max(d.sampled_sup_w1_over_h, v);
            ++d.lattice_points;
        }
    }
    return d;
}

} // namespace heatpole
