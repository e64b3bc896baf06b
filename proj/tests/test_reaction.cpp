#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "support.hpp"

using namespace wavelab;

namespace {

ReactionField kpp_field(double delta = 1.0) { return ReactionField::centered(ReactionProfile::kpp(), 30.0, delta); }

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 30) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double x0, double x1, double f0, double f1, double fmid, double s, int d) {
            const double xm = 0.5 * (x0 + x1);
            const double l = 0.5 * (x0 + xm), r = 0.5 * (xm + x1);
            const double fl = f(l), fr = f(r);
            const double left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + fmid);
            const double right = (x1 - xm) / 6.0 * (fmid + 4.0 * fr + f1);
            if (d <= 0 || std::abs(left + right - s) <= 15.0 * tol) return left + right + (left + right - s) / 15.0;
            return rec(x0, xm, f0, fmid, fl, left, d - 1) + rec(xm, x1, fmid, f1, fr, right, d - 1);
        };
    return rec(a, b, fa, fb, fm, whole, depth);
}

double dense_max(const std::function<double(double)>& f, double a, double b, int n = 200000) {
    double best = -INFINITY;
    for (int k = 1; k <= n; ++k) best = std::max(best, f(a + (b - a) * k / n));
    return best;
}

}  // namespace

TEST(ReactionEval, ZeroAtZero) {
    for (const char* name : {"kpp", "monostable", "bistable:0.2", "multistable5"}) {
        const auto rf = ReactionField::centered(ReactionProfile::parse(name), 30.0, 1.0);
        for (double z : {-20.0, -15.0, 0.0, 15.0, 20.0}) EXPECT_EQ(rf.f(z, 0.0), 0.0) << name;
    }
}

TEST(ReactionEval, OutsidePatchIsLinearDecay) { EXPECT_DOUBLE_EQ(kpp_field().f(20.0, 0.5), -0.5); }

TEST(ReactionEval, BistableThresholdIsZero) {
    const auto rf = ReactionField::centered(ReactionProfile::bistable(0.2), 30.0, 1.0);
    EXPECT_NEAR(rf.f(0.0, 0.2), 0.0, 1e-16);
}

TEST(ReactionAntiderivative, Examples) {
    const auto rf = kpp_field();
    EXPECT_EQ(rf.F(0.0, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(rf.F(40.0, 1.0), -0.5);
    const double oracle = adaptive_simpson([](double t) { return t * (1.0 - t); }, 0.0, 1.0, 1e-14);
    EXPECT_NEAR(rf.F(0.0, 1.0), oracle, 1e-13);
}

TEST(ReactionDerivative, Examples) {
    const auto rf = kpp_field(1.0);
    EXPECT_DOUBLE_EQ(rf.df_du(0.0, 0.0), 1.0);
    for (double u : {0.0, 0.3, 2.0}) EXPECT_DOUBLE_EQ(rf.df_du(30.0, u), -1.0);
    const auto bi = ReactionField::centered(ReactionProfile::bistable(0.2), 30.0, 1.0);
    double fd = 0.0;
    for (double h : {1e-4, 1e-6, 1e-8}) fd = (bi.f(0.0, h) - bi.f(0.0, 0.0)) / h;
    EXPECT_NEAR(bi.df_du(0.0, 0.0), fd, 1e-7);
    EXPECT_NEAR(bi.df_du(0.0, 0.0), -0.2, 1e-15);
}

TEST(ReactionLinearization, Examples) {
    const auto k = kpp_field(2.0).linearization_at_zero();
    EXPECT_DOUBLE_EQ(k(0.0), 1.0);
    EXPECT_DOUBLE_EQ(k(50.0), -2.0);
    const auto m = ReactionField::centered(ReactionProfile::monostable(), 30.0, 1.0).linearization_at_zero();
    EXPECT_DOUBLE_EQ(m(0.0), 0.0);
    const auto b = ReactionField::centered(ReactionProfile::bistable(0.2), 30.0, 1.0).linearization_at_zero();
    EXPECT_NEAR(b(0.0), -0.2, 1e-15);
}

TEST(ReactionMajorant, Examples) {
    EXPECT_NEAR(kpp_field().kpp_majorant_slope()(0.0), 1.0, 1e-12);
    const double bistable_oracle = dense_max([](double s) { return (1.0 - s) * (s - 0.2); }, 0.0, 1.0);
    EXPECT_NEAR(ReactionField::centered(ReactionProfile::bistable(0.2), 30.0, 1.0).kpp_majorant_slope()(0.0),
                bistable_oracle, 1e-9);
    EXPECT_NEAR(bistable_oracle, 0.16, 1e-9);
    const double mono_oracle = dense_max([](double s) { return s * (1.0 - s); }, 0.0, 1.0);
    EXPECT_NEAR(ReactionField::centered(ReactionProfile::monostable(), 30.0, 1.0).kpp_majorant_slope()(0.0), mono_oracle,
                1e-9);
}

TEST(ReactionProfileMass, Examples) {
    auto oracle = [](const ReactionProfile& p) {
        return adaptive_simpson([&](double t) { return p.f0()(t); }, 0.0, 1.0, 1e-15);
    };
    const auto bi = ReactionProfile::bistable(0.2);
    EXPECT_NEAR(bi.positive_mass(), oracle(bi), 1e-14);
    EXPECT_NEAR(bi.positive_mass(), 0.05, 1e-14);
    EXPECT_NEAR(ReactionProfile::kpp().positive_mass(), 1.0 / 6.0, 1e-15);
    EXPECT_EQ(ReactionProfile::polynomial({0.0}).positive_mass(), 0.0);
}

TEST(ReactionProfileValidation, RejectsInvalidProfiles) {
    EXPECT_THROW(ReactionProfile::polynomial({1.0, -1.0}), Error);       // f0(0) != 0
    EXPECT_THROW(ReactionProfile::polynomial({0.0, 0.0, 1.0}), Error);   // grows at infinity
    EXPECT_THROW(ReactionProfile::bistable(1.5), Error);
    EXPECT_THROW(ReactionProfile::parse("cubic"), Error);
    EXPECT_THROW(ReactionField::centered(ReactionProfile::kpp(), 30.0, 0.0), Error);
    EXPECT_NO_THROW(ReactionProfile::parse("poly:[0,1,-1]"));
    EXPECT_NEAR(ReactionProfile::parse("multistable5").upper_cap(), 1.5, 0.0);
}

TEST(ReactionProperty, AntiderivativeDifferentiatesToF) {
    auto gen = testkit::rng(1);
    std::uniform_real_distribution<double> Z(-40.0, 40.0), Uu(0.0, 1.5);
    const auto rf = ReactionField::centered(ReactionProfile::multistable5(), 30.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const double z = Z(gen), u = Uu(gen) + 1e-3;
        const double e = 1e-5;
        const double fd = (rf.F(z, u + e) - rf.F(z, u - e)) / (2.0 * e);
        EXPECT_NEAR(fd, rf.f(z, u), 1e-6 * (1.0 + u * u));
    }
}

TEST(ReactionProperty, OutsidePatchExactlyLinear) {
    auto gen = testkit::rng(2);
    std::uniform_real_distribution<double> Uu(0.0, 1.5), side(15.0, 150.0);
    for (const char* name : {"kpp", "bistable:0.2", "multistable5"}) {
        const auto rf = ReactionField::centered(ReactionProfile::parse(name), 30.0, 0.7);
        for (int k = 0; k < 500; ++k) {
            const double z = (k % 2 ? 1.0 : -1.0) * side(gen), u = Uu(gen);
            EXPECT_EQ(rf.f(z, u) + rf.delta() * u, 0.0);
        }
    }
}

TEST(ReactionProperty, LipschitzBoundStableUnderRefinement) {
    const auto rf = ReactionField::centered(ReactionProfile::multistable5(), 30.0, 1.0);
    auto lipschitz = [&](int n) {
        double best = 0.0;
        for (int k = 0; k < n; ++k) {
            const double a = 1.5 * k / n, b = 1.5 * (k + 1) / n;
            best = std::max(best, std::abs(rf.f(0.0, b) - rf.f(0.0, a)) / (b - a));
        }
        return best;
    };
    const double coarse = lipschitz(1000), fine = lipschitz(8000);
    EXPECT_TRUE(std::isfinite(fine));
    EXPECT_NEAR(coarse, fine, 1e-2 * fine);
}

TEST(ReactionProperty, MajorantDominatesLinearization) {
    for (const char* name : {"kpp", "monostable", "bistable:0.2", "bistable:0.4", "multistable5"}) {
        const auto rf = ReactionField::centered(ReactionProfile::parse(name), 30.0, 1.0);
        const auto g = rf.kpp_majorant_slope();
        const auto lin = rf.linearization_at_zero();
        for (double z = -40.0; z <= 40.0; z += 0.5) EXPECT_GE(g(z), lin(z)) << name << " z=" << z;
        for (double s = 1e-3; s <= rf.upper_cap(); s += 1e-3) EXPECT_LE(rf.f(0.0, s), g(0.0) * s + 1e-12) << name;
    }
}
