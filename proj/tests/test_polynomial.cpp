#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "wavelab/polynomial.hpp"

using wavelab::Polynomial;

TEST(Polynomial, EvaluatesHorner) {
    const Polynomial p{1.0, -2.0, 3.0};
    EXPECT_DOUBLE_EQ(p(0.0), 1.0);
    EXPECT_DOUBLE_EQ(p(2.0), 1.0 - 4.0 + 12.0);
    EXPECT_EQ(p.degree(), 2);
}

TEST(Polynomial, TrimsZeroLeadingCoefficients) {
    const Polynomial p{0.0, 1.0, 0.0, 0.0};
    EXPECT_EQ(p.degree(), 1);
    EXPECT_TRUE(Polynomial{}.is_zero());
}

TEST(Polynomial, FromRootsVanishesAtRoots) {
    const std::vector<double> roots{0.0, 1.0, 0.2, 1.1, 1.5};
    const Polynomial p = Polynomial::from_roots(roots, -1.0);
    for (double r : roots) EXPECT_NEAR(p(r), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(p.leading(), -1.0);
}

TEST(Polynomial, DerivativeAndAntiderivative) {
    const Polynomial p{0.0, 1.0, -1.0};
    const Polynomial d = p.derivative();
    EXPECT_DOUBLE_EQ(d(0.0), 1.0);
    EXPECT_DOUBLE_EQ(d(1.0), -1.0);
    const Polynomial P = p.antiderivative();
    EXPECT_DOUBLE_EQ(P(0.0), 0.0);
    EXPECT_NEAR(P(1.0), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(p.integrate(0.0, 1.0), 1.0 / 6.0, 1e-15);
}

TEST(Polynomial, IncrementMatchesDirectDifferenceOnRandomPairs) {
    auto gen = wavelab::testkit::rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    const Polynomial p = Polynomial::from_roots(std::vector<double>{0.0, 1.0, 0.2, 1.1, 1.5}, -1.0).antiderivative();
    for (int k = 0; k < 200; ++k) {
        const double a = U(gen), b = U(gen);
        EXPECT_NEAR(p.difference(a, b), p(b) - p(a), 1e-13 * (1.0 + std::abs(p(a)) + std::abs(p(b))));
    }
}

TEST(Polynomial, IncrementKeepsRelativeAccuracyForTinySteps) {
    const Polynomial p{0.0, 0.0, 0.5, -1.0 / 3.0};
    const double a = 0.7, d = 1e-12;
    const double exact = d * (p.derivative())(a);
    EXPECT_NEAR(p.increment(a, d), exact, 1e-8 * std::abs(exact));
}

TEST(Polynomial, RootsInFindsSignChanges) {
    const Polynomial p = Polynomial::from_roots(std::vector<double>{0.25, 0.5, 0.75});
    const auto r = p.roots_in(0.0, 1.0);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_NEAR(r[0], 0.25, 1e-12);
    EXPECT_NEAR(r[1], 0.5, 1e-12);
    EXPECT_NEAR(r[2], 0.75, 1e-12);
}

TEST(Polynomial, DividedByX) {
    const Polynomial p{0.0, 2.0, -3.0};
    const Polynomial q = p.divided_by_x();
    EXPECT_DOUBLE_EQ(q(0.0), 2.0);
    EXPECT_DOUBLE_EQ(q(1.0), -1.0);
}
