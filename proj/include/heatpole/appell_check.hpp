#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "kernel.hpp"
#include "rng.hpp"

namespace heatpole {

struct AppellCheckOptions {
    int points = 100;
    std::uint64_t seed = 11;
    double value_tol = 1e-10;
    double roundtrip_tol = 1e-12;
    FdSteps steps{1e-3, 1e-3};
    double fd_tol = 1e-3; // relative mismatch of the transformed residual at `steps`
    double fd_order_min = 1.5;
};

struct AppellCheckReport {
    int dim = 1;
    std::vector<double> gamma;
    int points = 0;
    double max_rel_forward = 0.0;   // (A h) against h-tilde
    double max_rel_inverse = 0.0;   // (A^{-1} h-tilde) against h
    double max_roundtrip = 0.0;     // point map round trips
    double residual_rel = 0.0;      // transformed residual identity at the base step
    double residual_rel_half = 0.0; // same at half step
    double residual_order = 0.0;
    bool passed = false;
};

// Smooth field that is not parabolic; used for the residual identity.
inline double appell_test_field(const SpaceTimePoint& z)
{
    double a = 0.0;
    for (size_t i = 0; i < z.x.size(); ++i) a += std::sin(z.x[i] + 0.3 * static_cast<double>(i));
    return std::exp(0.5 * a - z.t) + z.t * z.t;
}

// Prefactor in H[A u](z) = c(z) * (H u)(A^{-1} z), z.t < 0.
inline double appell_residual_factor(const SpaceTimePoint& z)
{
    const double N = static_cast<double>(z.x.size());
    double lg = 0.5 * N * std::log(std::numbers::pi) - std::log(4.0) - (0.5 * N + 2.0) * std::log(-z.t) -
                detail::norm2(z.x) / (4.0 * z.t);
    return std::exp(lg);
}

inline AppellCheckReport appell_identity_suite(const PoleConfig& base, const AppellCheckOptions& opt = {})
{
    PoleConfig plus = base, minus = base;
    plus.side = Side::Plus;
    minus.side = Side::Minus;
    plus.validate();
    AppellCheckReport rep;
    rep.dim = base.dim;
    rep.gamma = base.gamma;
    rep.points = opt.points;
    const size_t N = static_cast<size_t>(base.dim);
    PathRng rng(opt.seed, static_cast<std::uint64_t>(base.dim));
    auto rel = [](double log_a, double log_b) { return std::abs(std::expm1(log_a - log_b)); };

    for (int k = 0; k < opt.points; ++k) {
        SpaceTimePoint zm;
        zm.t = -std::exp(6.0 * rng.uniform() - 3.0);
        zm.x.resize(N);
        for (auto& v : zm.x) v = 4.0 * rng.uniform() - 2.0;
        double lhs = log_appell_multiplier(zm, AppellDirection::Forward) +
                     log_h(appell_source_point(zm, AppellDirection::Forward), plus);
        rep.max_rel_forward = std::max(rep.max_rel_forward, rel(lhs, log_h_tilde(zm, minus)));

        SpaceTimePoint zp;
        zp.t = std::exp(6.0 * rng.uniform() - 3.0);
        zp.x.resize(N);
        for (size_t i = 0; i < N; ++i) zp.x[i] = base.gamma[i] + 4.0 * rng.uniform() - 2.0;
        double lhs2 = log_appell_multiplier(zp, AppellDirection::Inverse) +
                      log_h_tilde(appell_source_point(zp, AppellDirection::Inverse), minus);
        rep.max_rel_inverse = std::max(rep.max_rel_inverse, rel(lhs2, log_h(zp, plus)));

        auto back = appell_point(appell_point(zp, AppellDirection::Forward), AppellDirection::Inverse);
        auto fwd = appell_point(appell_point(zm, AppellDirection::Inverse), AppellDirection::Forward);
        double d = std::abs(back.t - zp.t) / std::abs(zp.t) + std::abs(fwd.t - zm.t) / std::abs(zm.t);
        for (size_t i = 0; i < N; ++i)
            d = std::max({d, std::abs(back.x[i] - zp.x[i]) / std::max(1.0, std::abs(zp.x[i])),
                          std::abs(fwd.x[i] - zm.x[i]) / std::max(1.0, std::abs(zm.x[i]))});
        rep.max_roundtrip = std::max(rep.max_roundtrip, d);
    }

    auto Au = appell_transform(appell_test_field, AppellDirection::Forward);
    auto mismatch = [&](FdSteps st) {
        double worst = 0.0;
        for (double t : {-0.5, -1.0, -2.0}) {
            SpaceTimePoint z;
            z.t = t;
            z.x.assign(N, 0.0);
            for (size_t i = 0; i < N; ++i) z.x[i] = 0.4 - 0.3 * static_cast<double>(i);
            double lhs = heat_residual_fd(Au, z, st);
            auto src = appell_source_point(z, AppellDirection::Forward);
            // step of the source stencil scaled so both residuals carry comparable FD error
            double scale = 1.0 / (4.0 * t * t);
            double rhs = appell_residual_factor(z) * heat_residual_fd(appell_test_field, src, {st.dx, st.dt * scale});
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));
        }
        return worst;
    };
    rep.residual_rel = mismatch(opt.steps);
    rep.residual_rel_half = mismatch({opt.steps.dx / 2, opt.steps.dt / 2});
    rep.residual_order = std::log2(rep.residual_rel / rep.residual_rel_half);
    rep.passed = rep.max_rel_forward < opt.value_tol && rep.max_rel_inverse < opt.value_tol &&
                 rep.max_roundtrip < opt.roundtrip_tol && rep.residual_rel < opt.fd_tol &&
                 (rep.residual_rel_half < 1e-9 || rep.residual_order >= opt.fd_order_min);
    return rep;
}

} // namespace heatpole
