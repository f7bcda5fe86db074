#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <heatpole/integral_test.hpp>
#include <heatpole/profile_dsl.hpp>

using namespace heatpole;

namespace {

template <class F>
double simpson(F f, double a, double b, int n)
{
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace

TEST(Integrand, Examples)
{
    auto p = make_family_profile({1, 0.0, 1}, Side::Plus);
    double t = std::exp(-4.0);
    EXPECT_NEAR(criterion_integrand(p, 1, t), std::sqrt(std::log(4.0)) / (4.0 * t), 1e-12 / t);
    EXPECT_NEAR(criterion_integrand(p, 2, t), std::log(4.0) / (4.0 * t), 1e-12 / t);
    // l = 2 sqrt(t): log rho = 1
    for (int N : {1, 2, 3})
        EXPECT_NEAR(criterion_integrand_l_form(2.0 * std::sqrt(0.01), N, 0.01), std::pow(2.0, N) / (std::numbers::e * 0.01),
                    1e-10);
    EXPECT_THROW(criterion_integrand_l_form(0.0, 1, 0.1), DomainError);
    EXPECT_THROW(criterion_integrand_l_form(1.0, 1, 0.0), DomainError);
}

TEST(Integrand, EnvelopeFormIsScaledRhoForm)
{
    for (int N : {1, 2, 3})
        for (int k = 1; k <= 3; ++k) {
            auto p = make_family_profile({k, 0.25, N}, Side::Plus);
            for (double s : {p.s_min * 1.01, 2 * p.s_min, 50.0 + p.s_min}) {
                double t = std::exp(-s);
                double a = criterion_integrand_l_form(envelope_l(p, t), N, t);
                double b = criterion_integrand(p, N, t);
                EXPECT_NEAR(a / b, std::pow(4.0, 0.5 * N), 1e-10);
                EXPECT_NEAR(log_l_form_integrand_s(p, N, s) - log_criterion_integrand_s(p, N, s), 0.5 * N * std::log(4.0),
                            1e-10 * std::max(1.0, s));
            }
        }
}

TEST(Shells, MatchIndependentQuadratureInTime)
{
    for (int N : {1, 2})
        for (double eps : {0.0, 1.0}) {
            auto p = make_family_profile({2, eps, N}, Side::Plus);
            double s0 = default_shell_start(p);
            for (int k : {0, 3, 20}) {
                auto sh = compute_shell(p, N, IntegrandForm::Rho, s0, k);
                ASSERT_TRUE(sh.valid);
                double t_hi = std::exp(-sh.s_lo), t_lo = std::exp(-sh.s_hi);
                double ref = simpson([&](double t) { return criterion_integrand(p, N, t); }, t_lo, t_hi, 20000);
                EXPECT_NEAR(sh.value / ref, 1.0, 1e-8) << N << " " << eps << " " << k;
            }
        }
}

TEST(Shells, AdditiveUnderChangeOfVariables)
{
    auto p = make_family_profile({1, 0.0, 2}, Side::Minus);
    auto sh = dyadic_sums(p, 2, 16);
    double s0 = default_shell_start(p);
    double sum = 0.0;
    for (int k = 0; k < 6; ++k) sum += sh[static_cast<size_t>(k)].value;
    // over |t| directly: integrand (log rho)^{N/2}/(|t| rho) on t in [-e^{s0+6 ln2}, -e^{s0}]
    double ref = simpson([&](double t) { return criterion_integrand(p, 2, t); }, -std::exp(s0 + 6 * std::numbers::ln2),
                         -std::exp(s0), 200000);
    EXPECT_NEAR(sum / ref, 1.0, 1e-8);
}

TEST(Shells, HarmonicModelForLogProfile)
{
    // rho = |log t|, N = 1: S_k ~ ln2 (log s_k)^{1/2} / s_k
    auto p = make_family_profile({1, 0.0, 1}, Side::Plus);
    auto sh = dyadic_sums(p, 1, 128);
    for (const auto& x : sh) {
        ASSERT_TRUE(x.valid);
        double sm = 0.5 * (x.s_lo + x.s_hi);
        double model = std::numbers::ln2 * std::sqrt(std::log(sm)) / sm;
        EXPECT_GE(x.value / model, 0.5);
        EXPECT_LE(x.value / model, 2.0);
    }
}

TEST(Shells, NonnegativeAndSidesAgree)
{
    for (int k = 1; k <= 4; ++k) {
        FamilySpec f{k, 0.5, 2};
        auto a = dyadic_sums(make_family_profile(f, Side::Plus), 2, 64);
        auto b = dyadic_sums(make_family_profile(f, Side::Minus), 2, 64, IntegrandForm::Rho, std::nullopt, 4);
        for (size_t i = 0; i < a.size(); ++i) {
            EXPECT_GE(a[i].value, 0.0);
            EXPECT_EQ(a[i].value, b[i].value);
            EXPECT_EQ(a[i].panels, b[i].panels);
        }
    }
    EXPECT_THROW(dyadic_sums(make_family_profile({1, 0.0, 1}, Side::Plus), 1, 8), DomainError);
}

TEST(Classify, FamilyGridMatchesExactVerdict)
{
    for (int N : {1, 2})
        for (int k = 1; k <= 4; ++k)
            for (double eps : {-0.5, 0.0, 0.5, 1.0})
                for (Side side : {Side::Plus, Side::Minus}) {
                    auto p = make_family_profile({k, eps, N}, side);
                    Verdict v;
                    ASSERT_NO_THROW(v = classify(p, N)) << p.label;
                    EXPECT_EQ(v.kind, eps <= 0.0 ? VerdictKind::Diverges : VerdictKind::Converges) << p.label;
                    EXPECT_STREQ(removability(v.kind), eps <= 0.0 ? "Removable" : "NonRemovable");
                }
}

TEST(Classify, NumericRulesOnExpressions)
{
    auto div = dsl::make_expression_profile("abs(log(t))", Side::Plus);
    EXPECT_EQ(classify(div, 1).kind, VerdictKind::Diverges);
    auto cvg = dsl::make_expression_profile("abs(log(t))^3", Side::Plus);
    EXPECT_EQ(classify(cvg, 1).kind, VerdictKind::Converges);
    auto geo = dsl::make_expression_profile("1/t", Side::Plus);
    auto g = classify(geo, 2);
    EXPECT_EQ(g.kind, VerdictKind::Converges);
    EXPECT_LT(g.fit.ratio, 0.9);
    auto slow = dsl::make_expression_profile("abs(log(t))^2", Side::Plus);
    EXPECT_EQ(classify(slow, 1).kind, VerdictKind::Inconclusive);
}

TEST(Classify, DeterministicAcrossThreads)
{
    auto p = dsl::make_expression_profile("abs(log(t)) * log(abs(log(t)))^2", Side::Plus);
    ClassifyOptions a, b;
    b.threads = 4;
    auto va = classify(p, 2, a), vb = classify(p, 2, b);
    ASSERT_EQ(va.shells.size(), vb.shells.size());
    for (size_t i = 0; i < va.shells.size(); ++i) EXPECT_EQ(va.shells[i].log_value, vb.shells[i].log_value);
    EXPECT_EQ(va.kind, vb.kind);
    EXPECT_EQ(va.rationale, vb.rationale);
}
