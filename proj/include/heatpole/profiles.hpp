#pragma once

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

namespace heatpole {

// Singular coordinate s = |log|t||, oriented so that s -> +inf at the singular end:
// plus side s = -log t (t -> 0+), minus side s = log(-t) (t -> -inf).
inline double singular_coordinate(Side side, double t)
{
    if (side == Side::Plus) {
        if (!(t > 0.0)) throw DomainError("plus-side time must be positive");
        return -std::log(t);
    }
    if (!(t < 0.0)) throw DomainError("minus-side time must be negative");
    return std::log(-t);
}

inline double time_from_singular(Side side, double s)
{
    return side == Side::Plus ? std::exp(-s) : -std::exp(s);
}

// log|t| as a function of s.
inline double log_abs_time(Side side, double s) { return side == Side::Plus ? -s : s; }

struct FamilySpec {
    int k = 1;
    double epsilon = 0.0;
    int dim = 1;
};

// k-th iterated logarithm of the chain l_1 = s, l_j = log l_{j-1}.
inline double iter_log_s(int k, double s)
{
    if (k < 1) throw DomainError("iterated log order must be >= 1");
    double v = s;
    for (int j = 2; j <= k; ++j) {
        if (!(v > 0.0))
            throw DomainError("iterated log undefined at level " + std::to_string(j) + " (level " +
                              std::to_string(j - 1) + " is not positive)");
        v = std::log(v);
    }
    return v;
}

// log_1 t = |log|t||, log_k t = log log_{k-1} t.
inline double iter_log(int k, double t)
{
    if (t == 0.0 || !std::isfinite(t)) throw DomainError("iterated log needs finite nonzero t");
    return iter_log_s(k, std::abs(std::log(std::abs(t))));
}

namespace detail {

inline std::vector<double> family_exponents(const FamilySpec& f)
{
    std::vector<double> a(static_cast<size_t>(f.k), 1.0);
    if (f.k == 1) {
        a[0] = 1.0 + f.epsilon;
    } else if (f.k == 2) {
        a[1] = 0.5 * f.dim + 1.0 + f.epsilon;
    } else {
        a[1] = 0.5 * f.dim + 1.0;
        a[static_cast<size_t>(f.k - 1)] = 1.0 + f.epsilon;
    }
    return a;
}

inline void check_family(const FamilySpec& f)
{
    if (f.k < 1 || f.k > 4) throw DomainError("family index k must be in 1..4");
    if (f.dim < 1) throw DomainError("dimension must be >= 1");
    if (!std::isfinite(f.epsilon)) throw DomainError("epsilon must be finite");
}

} // namespace detail

// log rho as a function of s, summed in log space: sum_j a_j log l_j(s).
inline double family_log_rho_s(const FamilySpec& f, double s)
{
    detail::check_family(f);
    auto a = detail::family_exponents(f);
    double l = s, acc = 0.0;
    for (int j = 1; j <= f.k; ++j) {
        if (j > 1) l = std::log(l);
        if (!(l > 0.0))
            throw DomainError("family window violated: level " + std::to_string(j) + " iterated log is not positive");
        acc += a[static_cast<size_t>(j - 1)] * std::log(l);
    }
    return acc;
}

// d(log rho)/ds; d log l_j / ds = 1/(l_1 ... l_j).
inline double family_dlog_rho_ds(const FamilySpec& f, double s)
{
    detail::check_family(f);
    auto a = detail::family_exponents(f);
    double l = s, prod = 1.0, acc = 0.0;
    for (int j = 1; j <= f.k; ++j) {
        if (j > 1) l = std::log(l);
        if (!(l > 0.0)) throw DomainError("family window violated");
        prod *= l;
        acc += a[static_cast<size_t>(j - 1)] / prod;
    }
    return acc;
}

// Product form through iter_log; t of either sign (|t| is used).
inline double family_rho(const FamilySpec& f, double t)
{
    detail::check_family(f);
    auto a = detail::family_exponents(f);
    double rho = 1.0;
    for (int j = 1; j <= f.k; ++j) {
        double l = iter_log(j, t);
        if (!(l > 0.0)) throw DomainError("family window violated at level " + std::to_string(j));
        rho *= std::pow(l, a[static_cast<size_t>(j - 1)]);
    }
    return rho;
}

// Smallest s where all iterated logs of the family are positive and log rho >= 1,
// widened by 10%.
inline double family_window_s(const FamilySpec& f)
{
    detail::check_family(f);
    double base = 0.0;
    for (int j = 2; j <= f.k; ++j) base = std::exp(base);
    double s = std::max(base * 1.0000001, 1e-300);
    if (f.k == 1) s = 1.0;
    for (int it = 0; it < 4000; ++it) {
        bool ok = true;
        try {
            ok = family_log_rho_s(f, s) >= 1.0;
        } catch (const DomainError&) {
            ok = false;
        }
        if (ok) break;
        s = s * 1.05 + 1e-3;
    }
    // refine by bisection between the previous failing point and s
    double lo = std::max(base, s / 1.05 - 1e-3), hi = s;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        bool ok;
        try {
            ok = family_log_rho_s(f, mid) >= 1.0;
        } catch (const DomainError&) {
            ok = false;
        }
        (ok ? hi : lo) = mid;
    }
    return 1.1 * hi;
}

struct Profile {
    Side side = Side::Plus;
    std::string label;
    // Admissible for s > s_min; evaluation by t is bounded by s <= s_max (representability).
    double s_min = 0.0;
    double s_max = std::numeric_limits<double>::infinity();
    std::function<double(double)> log_rho_s;
    std::function<double(double)> dlog_rho_ds;
    std::optional<FamilySpec> family;
    std::optional<double> level_set_c;

    double lambda(double s) const { return log_rho_s(s); }

    double lambda_s(double s) const
    {
        if (dlog_rho_ds) return dlog_rho_ds(s);
        double h = 1e-5 * std::max(1.0, std::abs(s));
        return (log_rho_s(s + h) - log_rho_s(s - h)) / (2.0 * h);
    }

    double delta() const { return time_from_singular(side, s_min); }

    double log_rho(double t) const { return log_rho_s(singular_coordinate(side, t)); }
    double rho(double t) const { return std::exp(log_rho(t)); }

    bool in_window(double s) const { return s > s_min; }
};

inline Profile make_family_profile(const FamilySpec& f, Side side)
{
    detail::check_family(f);
    Profile p;
    p.side = side;
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "ilog:k=" << f.k << ",eps=" << f.epsilon;
    p.label = os.str();
    p.s_min = family_window_s(f);
    p.log_rho_s = [f](double s) { return family_log_rho_s(f, s); };
    p.dlog_rho_ds = [f](double s) { return family_dlog_rho_ds(f, s); };
    p.family = f;
    return p;
}

// log l at singular coordinate s; l = 2 (|t| log rho)^{1/2}.
inline double log_envelope_l_s(const Profile& p, double s)
{
    double lam = p.lambda(s);
    if (!(lam > 0.0)) throw DomainError("envelope undefined: rho <= 1");
    return std::numbers::ln2 + 0.5 * (log_abs_time(p.side, s) + std::log(lam));
}

inline double envelope_l(const Profile& p, double t)
{
    double lam = p.log_rho(t);
    if (!(lam > 0.0)) throw DomainError("envelope undefined: rho <= 1");
    return 2.0 * std::sqrt(std::abs(t) * lam);
}

enum class Severity { Info, Warning, Error };

inline const char* to_string(Severity s)
{
    switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    default: return "error";
    }
}

struct ProfileSample {
    double s;
    double log_rho;
};

struct ValidationFinding {
    std::string check;
    Severity severity = Severity::Info;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ProfileSample> grid;
    std::vector<ValidationFinding> findings;

    bool passed(const std::string& check) const
    {
        for (const auto& f : findings)
            if (f.check == check) return f.passed;
        return false;
    }
};

namespace detail {

inline double fraction_monotone(const std::vector<double>& v, bool increasing)
{
    if (v.size() < 2) return 0.0;
    int ok = 0;
    for (size_t i = 1; i < v.size(); ++i) {
        double d = v[i] - v[i - 1];
        if (increasing ? d >= -1e-12 * std::abs(v[i]) : d <= 1e-12 * std::abs(v[i])) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(v.size() - 1);
}

} // namespace detail

// Samples log rho toward the singular end on a grid that is geometric in |t|
// near the window and stretches to very small |t| for closed-form profiles.
inline ValidationReport validate_profile(const Profile& p, int sample_count = 64)
{
    ValidationReport rep;
    if (sample_count < 4) sample_count = 4;
    double s0 = p.s_min;
    double span = std::min(p.s_max - s0, 1e8 * std::max(1.0, std::abs(s0)));
    if (!(span > 0.0)) span = 1.0;

    std::vector<double> lam, x;
    std::string eval_failure;
    for (int j = 0; j < sample_count; ++j) {
        double u = static_cast<double>(j) / (sample_count - 1);
        double s = s0 + std::expm1(u * std::log1p(span));
        if (j == 0) s = s0 + 1e-9 * std::max(1.0, std::abs(s0));
        double v;
        try {
            v = p.lambda(s);
        } catch (const std::exception& e) {
            eval_failure = e.what();
            break;
        }
        if (!std::isfinite(v)) {
            eval_failure = "non-finite log rho";
            break;
        }
        rep.grid.push_back({s, v});
        lam.push_back(v);
        // log(|t| log rho) for plus, log(log rho / |t|) for minus: both are log(lam) - s
        x.push_back(v > 0.0 ? std::log(v) - s : -std::numeric_limits<double>::infinity());
    }

    auto add = [&](std::string check, Severity sev, bool ok, std::string detail) {
        rep.findings.push_back({std::move(check), sev, ok, std::move(detail)});
    };

    if (!eval_failure.empty())
        add("evaluation", Severity::Warning, false,
            "evaluation stopped after " + std::to_string(lam.size()) + " samples: " + eval_failure);

    if (lam.size() < 4) {
        add("rho_unbounded", Severity::Error, false, "too few samples");
        add(p.side == Side::Plus ? "t_log_rho_vanishes" : "log_rho_over_t_vanishes", Severity::Error, false,
            "too few samples");
        return rep;
    }

    {
        double frac = detail::fraction_monotone(lam, true);
        double growth = lam.back() - lam.front();
        bool ok = frac >= 0.9 && growth >= 1.0;
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << "log rho nondecreasing on " << frac * 100.0 << "% of steps, grows by " << growth;
        add("rho_unbounded", ok ? Severity::Info : Severity::Error, ok, os.str());
    }
    {
        double frac = detail::fraction_monotone(x, false);
        bool ok = frac >= 0.9 && x.back() <= x.front() - std::log(1e3) && x.back() < std::log(1e-3);
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << "log of the product nonincreasing on " << frac * 100.0 << "% of steps, final log value " << x.back();
        add(p.side == Side::Plus ? "t_log_rho_vanishes" : "log_rho_over_t_vanishes",
            ok ? Severity::Info : Severity::Error, ok, os.str());
    }
    if (p.side == Side::Plus) {
        // l increasing in t  <=>  t log rho decreasing in s;
        // t^{-1/2} l decreasing in t  <=>  log rho increasing in s.
        add("l_increasing", Severity::Info, detail::fraction_monotone(x, false) == 1.0,
            "advisory monotonicity of l on the sampled grid");
        add("l_over_sqrt_t_decreasing", Severity::Info, detail::fraction_monotone(lam, true) == 1.0,
            "advisory monotonicity of t^{-1/2} l on the sampled grid");
    }
    return rep;
}

} // namespace heatpole
