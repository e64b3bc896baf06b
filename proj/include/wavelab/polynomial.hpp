#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace wavelab {

/// Real polynomial with ascending coefficients: p(x) = c[0] + c[1] x + ... + c[n] x^n.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) { trim(); }
    Polynomial(std::initializer_list<double> coefficients) : c_(coefficients) { trim(); }

    /// Monic-times-scale polynomial scale * prod (x - r_k).
    static Polynomial from_roots(std::span<const double> roots, double scale = 1.0) {
        Polynomial p{scale};
        for (double r : roots) p = p * Polynomial{-r, 1.0};
        return p;
    }

    const std::vector<double>& coefficients() const noexcept { return c_; }
    bool is_zero() const noexcept { return c_.empty(); }
    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    double leading() const noexcept { return c_.empty() ? 0.0 : c_.back(); }
    double coefficient(std::size_t k) const noexcept { return k < c_.size() ? c_[k] : 0.0; }

    double operator()(double x) const noexcept {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    /// p(b) - p(a) accumulated term by term as (b - a) * sum_j b^j a^{k-1-j}, which avoids the
    /// cancellation of subtracting two large values when b is close to a.
    double difference(double a, double b) const noexcept { return increment(a, b - a); }

    /// p(a + d) - p(a) with the increment d supplied directly.
    double increment(double a, double d) const noexcept {
        const double b = a + d;
        double acc = 0.0;
        double a_pow = 1.0;  // a^{k-1}
        double sum = 0.0;    // sum_{j<k} b^j a^{k-1-j}
        for (std::size_t k = 1; k < c_.size(); ++k) {
            sum = (k == 1) ? 1.0 : sum * b + a_pow;
            acc += c_[k] * sum;
            a_pow *= a;
        }
        return d * acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Polynomial(std::move(d));
    }

    /// Antiderivative vanishing at 0.
    Polynomial antiderivative() const {
        if (c_.empty()) return {};
        std::vector<double> a(c_.size() + 1, 0.0);
        for (std::size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / static_cast<double>(k + 1);
        return Polynomial(std::move(a));
    }

    double integrate(double a, double b) const {
        const Polynomial P = antiderivative();
        return P(b) - P(a);
    }

    /// p(x) / x, assuming p(0) == 0 (the constant term is dropped).
    Polynomial divided_by_x() const {
        if (c_.size() <= 1) return {};
        return Polynomial(std::vector<double>(c_.begin() + 1, c_.end()));
    }

    friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
        if (p.is_zero() || q.is_zero()) return {};
        std::vector<double> r(p.c_.size() + q.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < p.c_.size(); ++i)
            for (std::size_t j = 0; j < q.c_.size(); ++j) r[i + j] += p.c_[i] * q.c_[j];
        return Polynomial(std::move(r));
    }

    friend Polynomial operator-(const Polynomial& p, const Polynomial& q) {
        std::vector<double> r(std::max(p.c_.size(), q.c_.size()), 0.0);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = p.coefficient(i) - q.coefficient(i);
        return Polynomial(std::move(r));
    }

    /// Sign-changing roots in [a, b], located by scanning `samples` cells and bisecting each bracket.
    /// Even-multiplicity roots are found only when a sample lands on them.
    std::vector<double> roots_in(double a, double b, int samples = 4000) const {
        std::vector<double> out;
        if (c_.empty() || !(b > a)) return out;
        const double step = (b - a) / samples;
        double x0 = a;
        double y0 = (*this)(x0);
        if (y0 == 0.0) out.push_back(x0);
        for (int k = 1; k <= samples; ++k) {
            const double x1 = (k == samples) ? b : a + k * step;
            const double y1 = (*this)(x1);
            if (y1 == 0.0) {
                out.push_back(x1);
            } else if (y0 != 0.0 && std::signbit(y0) != std::signbit(y1)) {
                double lo = x0, hi = x1, flo = y0;
                for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = (*this)(mid);
                    if (fm == 0.0) { lo = hi = mid; break; }
                    if (std::signbit(fm) == std::signbit(flo)) { lo = mid; flo = fm; } else { hi = mid; }
                }
                out.push_back(0.5 * (lo + hi));
            }
            x0 = x1;
            y0 = y1;
        }
        return out;
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }

    std::vector<double> c_;
};

}  // namespace wavelab
