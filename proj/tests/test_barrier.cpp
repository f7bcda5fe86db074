#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include <heatpole/barrier.hpp>
#include <heatpole/pde.hpp>

using namespace heatpole;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double simpson(F f, double a, double b, int n)
{
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// ball of radius R centred at distance r from the kernel centre, by polar quadrature
double ball_mass_quadrature(double R, double r, double s, int N)
{
    auto g = [&](double d2) { return std::pow(4.0 * kPi * s, -0.5 * N) * std::exp(-d2 / (4.0 * s)); };
    if (N == 1) return simpson([&](double x) { return g((x - r) * (x - r)); }, -R, R, 4000);
    if (N == 2)
        return simpson(
            [&](double rho) {
                return rho * simpson([&](double th) { return g(rho * rho + r * r - 2 * rho * r * std::cos(th)); }, 0, 2 * kPi, 400);
            },
            0, R, 800);
    return simpson(
        [&](double rho) {
            return 2 * kPi * rho * rho *
                   simpson([&](double th) { return std::sin(th) * g(rho * rho + r * r - 2 * rho * r * std::cos(th)); }, 0, kPi,
                           400);
        },
        0, R, 800);
}

BarrierConfig config(int k, double eps, int N, double log_n)
{
    return BarrierConfig{make_family_profile({k, eps, N}, Side::Plus), N, log_n};
}

} // namespace

TEST(BallMass, MatchesPolarQuadrature)
{
    for (int N : {1, 2, 3})
        for (double r : {0.0, 0.3, 1.5})
            for (double R : {0.5, 2.0}) {
                double s = 0.2;
                double q = ball_mass_quadrature(R, r, s, N);
                EXPECT_NEAR(gaussian_ball_mass_offset(R, r, s, N), q, 1e-8) << N << " " << r << " " << R;
            }
    EXPECT_EQ(gaussian_ball_mass(0.0, 1.0, 2), 0.0);
    EXPECT_NEAR(gaussian_ball_mass(50.0, 1.0, 3), 1.0, 1e-15);
    // N = 1 centred: erf(R / (2 sqrt s))
    EXPECT_NEAR(gaussian_ball_mass(0.7, 0.3, 1), std::erf(0.7 / (2 * std::sqrt(0.3))), 1e-14);
    EXPECT_NEAR(gaussian_ball_mass_offset(1.0, 0.4, 0.3, 1), gaussian_ball_mass_offset_general(1.0, 0.4, 0.3, 1), 1e-12);
    EXPECT_THROW(gaussian_ball_mass_offset(1.0, -0.1, 1.0, 2), DomainError);
    EXPECT_THROW(gaussian_ball_mass(1.0, 0.0, 2), DomainError);
}

TEST(Barrier, UExamples)
{
    auto p = make_family_profile({1, 0.0, 1}, Side::Plus);
    double t = 1e-4;
    EXPECT_NEAR(subparabolic_barrier_u(0.0, t, p), 1.0 - 1.0 / p.rho(t), 1e-14);
    EXPECT_NEAR(subparabolic_barrier_u(envelope_l(p, t), t, p), 0.0, 1e-12);
    EXPECT_LT(subparabolic_barrier_u(1.01 * envelope_l(p, t), t, p), 0.0);
    BarrierConfig c{p, 1, std::log(1e10)};
    EXPECT_NEAR(split_mu(t, c), 0.01 / std::pow(std::log(-std::log(t)), 2), 1e-15);
}

TEST(Barrier, WOverHSignAndInitialValue)
{
    for (int N : {1, 2, 3}) {
        auto c = config(1, 0.0, N, std::log(1e8));
        for (double t : {1e-3, 1e-5, 1e-7}) {
            double l = envelope_l(c.profile, t);
            for (double f : {0.0, 0.5, 0.9}) {
                auto w = w_over_h_pieces(t, f * l, c);
                EXPECT_GE(w.far, 0.0);
                EXPECT_GE(w.near, 0.0);
                EXPECT_LE(eval_w_over_h(t, f * l, c), 0.0);
            }
        }
        EXPECT_EQ(eval_w_over_h(1e-8, 0.0, c), 0.0);
        EXPECT_EQ(eval_w_over_h(1e-9, 0.0, c), 0.0);
    }
}

TEST(Barrier, PiecesRespectSegmentBounds)
{
    for (int N : {1, 2})
        for (double eps : {0.0, 1.0})
            for (double log_n : {std::log(1e10), kInf}) {
                if (eps == 0.0 && log_n == kInf) continue;
                auto c = config(1, eps, N, log_n);
                for (double t : {1e-3, 1e-6}) {
                    auto w = w_over_h_pieces(t, 0.0, c);
                    EXPECT_LE(w.near, segment_bound_near(t, c) * (1 + 1e-9)) << N << " " << eps << " " << t;
                    EXPECT_LE(w.far, tail_bound_far(t, c) * (1 + 1e-9)) << N << " " << eps << " " << t;
                }
            }
}

TEST(Barrier, LeadingTerm)
{
    EXPECT_NEAR(leading_coefficient(1), 1.0 / std::sqrt(kPi), 1e-15);
    EXPECT_NEAR(leading_coefficient(2), 1.0, 1e-15);
    for (int N : {1, 2, 3, 4})
        EXPECT_NEAR(leading_coefficient(N), N * unit_ball_volume(N) / (2.0 * std::pow(kPi, 0.5 * N)), 1e-14);

    auto c = config(2, 0.0, 2, std::log(1e12));
    double prev = 0.0;
    for (double t : {1e-10, 1e-8, 1e-6, 1e-4}) {
        double v = leading_term(t, c);
        EXPECT_GT(v, prev);
        prev = v;
    }
    double lo = leading_term(1e-6, c);
    c.log_n = std::log(1e20);
    EXPECT_GT(leading_term(1e-6, c), lo);
    EXPECT_LT(leading_term_split(1e-6, c), leading_term(1e-6, c));
    // rho = |log t|, N = 2: integrand log(sigma)/sigma
    auto d = config(1, 0.0, 2, std::log(1e12));
    double a = std::log(std::log(1e6)), b = std::log(std::log(1e12));
    EXPECT_NEAR(leading_term(1e-6, d), 0.5 * (b * b - a * a), 1e-8);
}

TEST(Barrier, AsymptoticRatio)
{
    auto c = config(1, 0.0, 1, 0.0);
    auto rep = asymptotic_ratio_check(c, {1e-6}, {std::log(1e10)});
    ASSERT_TRUE(rep.applicable);
    ASSERT_EQ(rep.entries.size(), 1u);
    EXPECT_TRUE(rep.ratio_in_band);
    EXPECT_TRUE(rep.off_center_in_band);
    EXPECT_NEAR(rep.entries[0].ratio, -rep.entries[0].w_over_h / rep.entries[0].leading, 1e-15);

    auto conv = asymptotic_ratio_check(config(1, 1.0, 1, 0.0), {1e-6}, {std::log(1e10)});
    EXPECT_FALSE(conv.applicable);
    EXPECT_FALSE(conv.passed());
    EXPECT_NE(conv.note.find("Converges"), std::string::npos);
    EXPECT_THROW(asymptotic_ratio_check(c, {1e-6, 1e-7}, {20.0}), DomainError);
}

TEST(Barrier, CriticalTime)
{
    for (double eps : {0.5, 2.0}) {
        auto c = config(1, eps, 1, kInf);
        auto ct = critical_time(c);
        EXPECT_LE(ct.bound_at_t, 0.5);
        EXPECT_NEAR(ct.bound_at_t, segment_bound_near(ct.t, c) + tail_bound_far(ct.t, c), 1e-12);
        if (!ct.at_window_edge) {
            double t_up = ct.t * 1.001;
            EXPECT_GT(segment_bound_near(t_up, c) + tail_bound_far(t_up, c), 0.5);
        }
        // below the critical time the n = infinity lower bound is at least 1/2 - 1/rho
        double t = ct.t / 10.0;
        EXPECT_GE(barrier_lower_bound(0.0, t, c), 0.5 - 1.0 / c.profile.rho(t) - 1e-12);
    }
}

TEST(Barrier, LowerBoundsTheTruncatedSolution)
{
    auto c = config(1, 2.0, 1, 40 * std::log(4.0));
    for (double t : {1e-2, 1e-4, 1e-8}) {
        SolveOptions so;
        so.probes = {{0.0, std::log(t)}, {0.5, std::log(t)}};
        auto r = solve_truncated({c.profile, 1, c.log_n, RadialGrid{256, 32}, 1.0}, so);
        EXPECT_LE(barrier_lower_bound(0.0, t, c), r.probe_values[0] + 1e-3) << t;
        EXPECT_LE(barrier_lower_bound(0.5 * envelope_l(c.profile, t), t, c), r.probe_values[1] + 1e-3) << t;
    }
}

TEST(Barrier, SplitDiagnostics)
{
    auto c = config(1, 1.0, 2, std::log(1e12));
    auto d = split_diagnostics(c, 1e-3);
    EXPECT_TRUE(d.l_below_half_dim);
    EXPECT_TRUE(d.rho_dominates_log);
    EXPECT_NEAR(d.w1_scale, (2.0 - 2.0 * d.L) / 2.0, 1e-15);
    EXPECT_EQ(d.lattice_points, 40);
    EXPECT_GE(d.sampled_sup_w1_over_h, 0.0);
}

TEST(Barrier, RejectsInvalidInputs)
{
    EXPECT_THROW(eval_w_over_h(1e-4, 0.0, config(1, 0.0, 1, kInf)), SolverError);
    BarrierConfig c{make_family_profile({1, 0.0, 1}, Side::Minus), 1, 20.0};
    EXPECT_THROW(eval_w_over_h(1e-3, 0.0, c), DomainError);
    auto p = config(1, 0.0, 1, 20.0);
    EXPECT_THROW(eval_w_over_h(0.5, 0.0, p), DomainError);
}
