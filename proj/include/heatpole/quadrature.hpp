#pragma once

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "special.hpp"

namespace heatpole::quad {

inline constexpr int kOrder = 20;
using Rule = boost::math::quadrature::gauss<double, kOrder>;

// Composite Gauss-Legendre on `panels` equal panels.
template <class F>
double panels(F&& f, double a, double b, int panel_count)
{
    double h = (b - a) / panel_count;
    double acc = 0.0;
    for (int p = 0; p < panel_count; ++p) {
        double lo = a + p * h;
        double hi = (p + 1 == panel_count) ? b : lo + h;
        acc += Rule::integrate(f, lo, hi);
    }
    return acc;
}

// log of a positive integral from an integrand supplied as log f. Never
// exponentiates anything larger than the running maximum, so integrals whose
// values lie far outside the double range are still representable.
template <class LogF>
double log_panels(LogF&& log_f, double a, double b, int panel_count)
{
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    double h = (b - a) / panel_count;
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(panel_count) * (2 * x.size()));
    for (int p = 0; p < panel_count; ++p) {
        double lo = a + p * h;
        double hi = (p + 1 == panel_count) ? b : lo + h;
        double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        double log_r = std::log(r);
        for (size_t i = 0; i < x.size(); ++i) {
            double lw = std::log(w[i]) + log_r;
            if (x[i] == 0.0) {
                terms.push_back(lw + log_f(c));
            } else {
                terms.push_back(lw + log_f(c + r * x[i]));
                terms.push_back(lw + log_f(c - r * x[i]));
            }
        }
    }
    return log_sum_exp(terms);
}

struct Result {
    double value = 0.0;
    int panels = 0;
    bool converged = false;
};

// Panel doubling until two successive results agree to rel_tol.
template <class F>
Result doubling(F&& f, double a, double b, double rel_tol = 1e-8, int max_panels = 4096,
                int start_panels = 1)
{
    Result r;
    int n = start_panels;
    double prev = panels(f, a, b, n);
    while (n < max_panels) {
        n *= 2;
        double cur = panels(f, a, b, n);
        if (std::abs(cur - prev) <= rel_tol * std::abs(cur) || (cur == 0.0 && prev == 0.0)) {
            return {cur, n, true};
        }
        prev = cur;
    }
    r.value = prev;
    r.panels = n;
    r.converged = false;
    return r;
}

template <class LogF>
Result log_doubling(LogF&& log_f, double a, double b, double rel_tol = 1e-10, int max_panels = 256,
                    int start_panels = 1)
{
    int n = start_panels;
    double prev = log_panels(log_f, a, b, n);
    while (n < max_panels) {
        n *= 2;
        double cur = log_panels(log_f, a, b, n);
        if (cur == kNegInf && prev == kNegInf) return {cur, n, true};
        if (std::abs(cur - prev) <= rel_tol) return {cur, n, true};
        prev = cur;
    }
    return {prev, n, false};
}

} // namespace heatpole::quad
