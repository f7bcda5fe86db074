#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include <boost/math/special_functions/gamma.hpp>

namespace heatpole {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(double a, double b)
{
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs)
{
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

// Volume of the unit ball in R^N.
inline double unit_ball_volume(int N)
{
    return std::pow(std::numbers::pi, 0.5 * N) / boost::math::tgamma(0.5 * N + 1.0);
}

inline double log_gamma(double x) { return boost::math::lgamma(x); }

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x)
{
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(a, x);
}

// log P(a, x), accurate also where P underflows.
inline double log_gamma_p(double a, double x)
{
    if (x <= 0.0) return kNegInf;
    if (x < 1e-3 * (a + 1.0)) {
        // leading series term times the (convergent) remainder
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= x / (a + k);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return a * std::log(x) - x - log_gamma(a + 1.0) + std::log(sum);
    }
    return std::log(gamma_p(a, x));
}

// log P(a, x) - a log x, given log x; usable where x itself underflows.
inline double log_gamma_p_rest_of_log(double a, double log_x)
{
    if (log_x > std::log(1e-3 * (a + 1.0))) return log_gamma_p(a, std::exp(log_x)) - a * log_x;
    double x = std::exp(log_x);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= x / (a + k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return -x - log_gamma(a + 1.0) + std::log(sum);
}

// log P(a, x) given log x.
inline double log_gamma_p_of_log(double a, double log_x) { return a * log_x + log_gamma_p_rest_of_log(a, log_x); }

} // namespace heatpole
