#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <heatpole/appell_check.hpp>
#include <heatpole/kernel.hpp>
#include <heatpole/profiles.hpp>

using namespace heatpole;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson on [a,b] with n (even) intervals.
template <class F>
double simpson(F f, double a, double b, int n)
{
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace

TEST(KernelConstants, UnitBallVolumes)
{
    EXPECT_NEAR(KernelConstants::for_dim(1).omega_N, 2.0, 1e-14);
    EXPECT_NEAR(KernelConstants::for_dim(2).omega_N, kPi, 1e-14);
    EXPECT_NEAR(KernelConstants::for_dim(3).omega_N, 4.0 * kPi / 3.0, 1e-14);
    EXPECT_NEAR(KernelConstants::for_dim(4).omega_N, kPi * kPi / 2.0, 1e-13);
    EXPECT_NEAR(KernelConstants::for_dim(3).log_norm, -1.5 * std::log(4.0 * kPi), 1e-14);
}

TEST(HeatKernel, Examples)
{
    std::vector<double> x0{0.0};
    EXPECT_NEAR(log_heat_kernel(x0, 1.0 / (4.0 * kPi)), 0.0, 1e-15);
    std::vector<double> a{0.7, -1.3}, b{-0.7, 1.3};
    EXPECT_DOUBLE_EQ(log_heat_kernel(a, 0.4), log_heat_kernel(b, 0.4));
    EXPECT_THROW(log_heat_kernel(x0, 0.0), DomainError);
    EXPECT_THROW(log_heat_kernel(x0, -1.0), DomainError);
}

TEST(HeatKernel, UnitMassInTwoDimensions)
{
    const double t = 0.3, L = 12.0;
    auto inner = [&](double x) {
        return simpson([&](double y) { return std::exp(log_heat_kernel(std::vector<double>{x, y}, t)); }, -L, L, 800);
    };
    EXPECT_NEAR(simpson(inner, -L, L, 800), 1.0, 1e-8);
}

TEST(HeatKernel, FiniteOverWideRange)
{
    for (double lt = -290.0; lt <= 300.0; lt += 10.0)
        for (double r : {0.0, 1.0, 1e3, 1e6}) {
            std::vector<double> x{r, 0.0};
            EXPECT_TRUE(std::isfinite(log_heat_kernel(x, std::pow(10.0, lt)))) << lt << " " << r;
        }
}

TEST(Poles, LogH)
{
    PoleConfig c{2, {0.3, -0.2}, Side::Plus};
    EXPECT_NEAR(log_h({{0.3, -0.2}, 0.5}, c), -std::log(4.0 * kPi * 0.5), 1e-14);
    PoleConfig c1 = PoleConfig::origin(1);
    EXPECT_NEAR(log_h({{2.0}, 1.0}, c1), -0.5 * std::log(4.0 * kPi) - 1.0, 1e-14);
    EXPECT_THROW(log_h({{2.0}, 1.0}, PoleConfig::origin(1, Side::Minus)), DomainError);
}

TEST(Poles, LevelSetOfH)
{
    // |x - gamma|^2 = -2 N t log(t/c)  =>  h = (4 pi c)^{-N/2}
    for (int N : {1, 2, 3})
        for (double c : {0.5, 1.0, 2.0})
            for (double t : {1e-6, 1e-3, 0.3 * c}) {
                PoleConfig cfg = PoleConfig::origin(N);
                std::vector<double> x(static_cast<size_t>(N), 0.0);
                x[0] = std::sqrt(-2.0 * N * t * std::log(t / c));
                EXPECT_NEAR(log_h({x, t}, cfg), -0.5 * N * std::log(4.0 * kPi * c), 1e-12);
            }
}

TEST(Poles, LogHTilde)
{
    PoleConfig zero = PoleConfig::origin(3, Side::Minus);
    EXPECT_EQ(log_h_tilde({{1.0, 2.0, 3.0}, -4.0}, zero), 0.0);
    PoleConfig c{2, {0.5, 0.25}, Side::Minus};
    double g2 = 0.25 + 0.0625;
    EXPECT_NEAR(log_h_tilde({{0.0, 0.0}, -3.0}, c), -3.0 * g2, 1e-15);
    double t = -2.0;
    EXPECT_NEAR(log_h_tilde({{-2 * t * 0.5, -2 * t * 0.25}, t}, c), -g2 * t, 1e-14);
    EXPECT_THROW(log_h_tilde({{0.0, 0.0}, -1.0}, PoleConfig{2, {0, 0}, Side::Plus}), DomainError);
}

TEST(Appell, PointMap)
{
    auto w = appell_point({{2.0}, 1.0}, AppellDirection::Forward);
    EXPECT_DOUBLE_EQ(w.x[0], 1.0);
    EXPECT_DOUBLE_EQ(w.t, -0.25);
    for (double s : {0.1, 1.0, 7.0}) EXPECT_NEAR(appell_point({{0.0}, 1.0 / (4.0 * s)}, AppellDirection::Forward).t, -s, 1e-15);
    EXPECT_THROW(appell_point({{1.0}, 0.0}, AppellDirection::Forward), DomainError);
    EXPECT_THROW(appell_point({{1.0}, -1.0}, AppellDirection::Forward), DomainError);
    EXPECT_THROW(appell_point({{1.0}, 1.0}, AppellDirection::Inverse), DomainError);

    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int i = 0; i < 100; ++i) {
        SpaceTimePoint z{{U(g), U(g)}, std::exp(U(g))};
        auto back = appell_point(appell_point(z, AppellDirection::Forward), AppellDirection::Inverse);
        EXPECT_NEAR(back.t, z.t, 1e-12 * z.t);
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(back.x[k], z.x[k], 1e-12 * std::max(1.0, std::abs(z.x[k])));
    }
}

TEST(Appell, TransformOfPoles)
{
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int N : {1, 2, 3}) {
        PoleConfig plus = PoleConfig::origin(N);
        for (int i = 0; i < N; ++i) plus.gamma[static_cast<size_t>(i)] = U(g);
        PoleConfig minus = plus;
        minus.side = Side::Minus;
        auto h = [&](const SpaceTimePoint& z) { return std::exp(log_h(z, plus)); };
        auto ht = [&](const SpaceTimePoint& z) { return std::exp(log_h_tilde(z, minus)); };
        auto Ah = appell_transform(h, AppellDirection::Forward);
        auto Aiht = appell_transform(ht, AppellDirection::Inverse);
        for (int k = 0; k < 100; ++k) {
            SpaceTimePoint zm{std::vector<double>(static_cast<size_t>(N)), -std::exp(U(g))};
            for (auto& v : zm.x) v = U(g);
            EXPECT_NEAR(Ah(zm) / ht(zm), 1.0, 1e-10);
            SpaceTimePoint zp{std::vector<double>(static_cast<size_t>(N)), std::exp(U(g))};
            for (size_t j = 0; j < zp.x.size(); ++j) zp.x[j] = plus.gamma[j] + 0.5 * U(g);
            EXPECT_NEAR(Aiht(zp) / h(zp), 1.0, 1e-10);
        }
    }
}

TEST(Appell, Linearity)
{
    SpaceTimePoint z{{0.3, -0.1}, -0.7};
    auto u = [](const SpaceTimePoint& p) { return std::cos(p.x[0]) + p.t; };
    auto cu = [&](const SpaceTimePoint& p) { return 3.5 * u(p); };
    EXPECT_NEAR(appell_transform(cu, AppellDirection::Forward)(z), 3.5 * appell_transform(u, AppellDirection::Forward)(z),
                1e-12);
    EXPECT_THROW(appell_transform_value(1.0, {{0.0}, 1.0}, AppellDirection::Forward), DomainError);
    EXPECT_THROW(appell_transform_value(1.0, {{0.0}, -1.0}, AppellDirection::Inverse), DomainError);
}

TEST(Appell, IdentitySuite)
{
    for (int N : {1, 2, 3}) {
        PoleConfig c = PoleConfig::origin(N);
        for (int i = 0; i < N; ++i) c.gamma[static_cast<size_t>(i)] = 0.5 - 0.25 * i;
        auto r = appell_identity_suite(c);
        EXPECT_TRUE(r.passed) << N;
        EXPECT_LT(r.max_rel_forward, 1e-10);
        EXPECT_LT(r.max_rel_inverse, 1e-10);
        EXPECT_LT(r.max_roundtrip, 1e-12);
        EXPECT_GT(r.residual_order, 1.8);
    }
}

TEST(HeatResidual, ParabolicFieldsConvergeAtSecondOrder)
{
    PoleConfig plus{2, {0.2, -0.4}, Side::Plus};
    PoleConfig minus{2, {0.2, -0.4}, Side::Minus};
    auto F = [&](const SpaceTimePoint& z) { return std::exp(log_h(z, plus)); };
    auto Ht = [&](const SpaceTimePoint& z) { return std::exp(log_h_tilde(z, minus)); };
    SpaceTimePoint zp{{0.5, 0.1}, 0.7}, zm{{0.5, 0.1}, -0.7};
    double e1 = std::abs(heat_residual_fd(F, zp, {1e-2, 1e-2})), e2 = std::abs(heat_residual_fd(F, zp, {5e-3, 5e-3}));
    EXPECT_GE(std::log2(e1 / e2), 1.8);
    double g1 = std::abs(heat_residual_fd(Ht, zm, {1e-2, 1e-2})), g2 = std::abs(heat_residual_fd(Ht, zm, {5e-3, 5e-3}));
    EXPECT_GE(std::log2(g1 / g2), 1.8);
}

TEST(HeatResidual, BarrierTimesPoleClosedForm)
{
    // u h with u = 1 - e^{|x-gamma|^2/(4t)} / rho(t), rho = |log t|:
    // H(u h) = (rho'/rho^2 + N/(2 t rho)) (4 pi t)^{-N/2}
    for (int N : {1, 2}) {
        PoleConfig c = PoleConfig::origin(N);
        auto rho = [](double t) { return -std::log(t); };
        auto drho = [](double t) { return -1.0 / t; };
        auto uh = [&](const SpaceTimePoint& z) {
            double r2 = 0.0;
            for (double v : z.x) r2 += v * v;
            return (1.0 - std::exp(r2 / (4.0 * z.t)) / rho(z.t)) * std::exp(log_h(z, c));
        };
        SpaceTimePoint z{std::vector<double>(static_cast<size_t>(N), 0.01), 0.05};
        double t = z.t, r = rho(t);
        double exact = (drho(t) / (r * r) + 0.5 * N / (t * r)) * std::pow(4.0 * kPi * t, -0.5 * N);
        double fd1 = heat_residual_fd(uh, z, {1e-3, 1e-4});
        double fd2 = heat_residual_fd(uh, z, {5e-4, 5e-5});
        EXPECT_NEAR(fd2 / exact, 1.0, 1e-4);
        EXPECT_LT(std::abs(fd2 - exact), std::abs(fd1 - exact));
    }
}
