#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "special.hpp"

namespace heatpole {

enum class Side { Plus, Minus };

inline const char* to_string(Side s) { return s == Side::Plus ? "plus" : "minus"; }

struct PoleConfig {
    int dim = 1;
    std::vector<double> gamma;
    Side side = Side::Plus;

    static PoleConfig origin(int dim, Side side = Side::Plus)
    {
        return {dim, std::vector<double>(static_cast<size_t>(dim), 0.0), side};
    }

    void validate() const
    {
        if (dim < 1) throw DomainError("dimension must be >= 1");
        if (gamma.size() != static_cast<size_t>(dim))
            throw DomainError("gamma has " + std::to_string(gamma.size()) + " components, expected " +
                              std::to_string(dim));
        for (double g : gamma)
            if (!std::isfinite(g)) throw DomainError("gamma must be finite");
    }
};

struct SpaceTimePoint {
    std::vector<double> x;
    double t = 0.0;
};

struct KernelConstants {
    double omega_N;
    double log_norm;

    static KernelConstants for_dim(int N)
    {
        return {unit_ball_volume(N), -0.5 * N * std::log(4.0 * std::numbers::pi)};
    }
};

namespace detail {

inline double norm2(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void check_dim(const SpaceTimePoint& z, const PoleConfig& cfg)
{
    if (z.x.size() != static_cast<size_t>(cfg.dim))
        throw DomainError("point dimension does not match the pole configuration");
}

} // namespace detail

// log F(x,t), F(x,t) = (4 pi t)^{-N/2} exp(-|x|^2/(4t)), N = x.size().
inline double log_heat_kernel(std::span<const double> x, double t)
{
    if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
    const double N = static_cast<double>(x.size());
    return -0.5 * N * (std::log(4.0 * std::numbers::pi) + std::log(t)) - detail::norm2(x) / (4.0 * t);
}

inline double log_h(const SpaceTimePoint& z, const PoleConfig& cfg)
{
    if (cfg.side != Side::Plus) throw DomainError("h lives on the plus side");
    detail::check_dim(z, cfg);
    std::vector<double> d(z.x.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = z.x[i] - cfg.gamma[i];
    return log_heat_kernel(d, z.t);
}

inline double log_h_tilde(const SpaceTimePoint& z, const PoleConfig& cfg)
{
    if (cfg.side != Side::Minus) throw DomainError("h-tilde lives on the minus side");
    detail::check_dim(z, cfg);
    return detail::dot(z.x, cfg.gamma) + detail::norm2(cfg.gamma) * z.t;
}

enum class AppellDirection { Forward, Inverse };

// Forward: (x,t), t>0  ->  (x/(2t), -1/(4t)).
// Inverse: (x,t), t<0  ->  (-x/(2t), -1/(4t)).
inline SpaceTimePoint appell_point(const SpaceTimePoint& z, AppellDirection dir)
{
    if (z.t == 0.0) throw DomainError("t = 0 has no finite Appell image");
    if (dir == AppellDirection::Forward && z.t < 0.0) throw DomainError("forward Appell map needs t > 0");
    if (dir == AppellDirection::Inverse && z.t > 0.0) throw DomainError("inverse Appell map needs t < 0");
    SpaceTimePoint w;
    w.x.resize(z.x.size());
    double f = (dir == AppellDirection::Forward ? 1.0 : -1.0) / (2.0 * z.t);
    for (size_t i = 0; i < z.x.size(); ++i) w.x[i] = f * z.x[i];
    w.t = -1.0 / (4.0 * z.t);
    return w;
}

// Log of the multiplier in the function transform at the evaluation point z.
// Forward (z.t < 0): (A u)(z) = (-pi/t)^{N/2} e^{-|x|^2/(4t)} u(A^{-1} z).
// Inverse (z.t > 0): (A^{-1} v)(z) = F(z) v(A z).
inline double log_appell_multiplier(const SpaceTimePoint& z, AppellDirection dir)
{
    const double N = static_cast<double>(z.x.size());
    if (dir == AppellDirection::Forward) {
        if (!(z.t < 0.0)) throw DomainError("Appell transform A is evaluated at t < 0");
        return 0.5 * N * std::log(-std::numbers::pi / z.t) - detail::norm2(z.x) / (4.0 * z.t);
    }
    if (!(z.t > 0.0)) throw DomainError("inverse Appell transform is evaluated at t > 0");
    return log_heat_kernel(z.x, z.t);
}

inline double appell_transform_value(double value_at_image, const SpaceTimePoint& z, AppellDirection dir)
{
    return std::exp(log_appell_multiplier(z, dir)) * value_at_image;
}

// Point where the argument of the transformed function is evaluated.
inline SpaceTimePoint appell_source_point(const SpaceTimePoint& z, AppellDirection dir)
{
    return appell_point(z, dir == AppellDirection::Forward ? AppellDirection::Inverse : AppellDirection::Forward);
}

// Wraps a field u(z) into its transform z -> (A u)(z) or (A^{-1} u)(z).
template <class Field>
auto appell_transform(Field u, AppellDirection dir)
{
    return [u = std::move(u), dir](const SpaceTimePoint& z) {
        return appell_transform_value(u(appell_source_point(z, dir)), z, dir);
    };
}

struct FdSteps {
    double dx = 1e-3;
    double dt = 1e-3;
};

// Centered estimate of u_t - Laplacian(u) at z.
template <class Field>
double heat_residual_fd(Field&& u, const SpaceTimePoint& z, FdSteps steps)
{
    SpaceTimePoint p = z;
    p.t = z.t + steps.dt;
    double up = u(p);
    p.t = z.t - steps.dt;
    double um = u(p);
    double ut = (up - um) / (2.0 * steps.dt);

    double u0 = u(z);
    double lap = 0.0;
    p.t = z.t;
    for (size_t i = 0; i < z.x.size(); ++i) {
        p.x = z.x;
        p.x[i] = z.x[i] + steps.dx;
        double a = u(p);
        p.x[i] = z.x[i] - steps.dx;
        double b = u(p);
        lap += (a - 2.0 * u0 + b) / (steps.dx * steps.dx);
    }
    return ut - lap;
}

} // namespace heatpole
