#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wavelab/error.hpp"
#include "wavelab/polynomial.hpp"

namespace wavelab {

enum class ProfileKind { KPP, Monostable, Bistable, Multistable, CustomPolynomial };

/// Patch nonlinearity f_0 together with its overcrowding cap M (f_0 <= 0 on [M, inf)).
class ReactionProfile {
public:
    ReactionProfile(ProfileKind kind, Polynomial f0, double upper_cap, std::optional<double> theta = std::nullopt,
                    std::string name = {})
        : kind_(kind), f0_(std::move(f0)), F0_(f0_.antiderivative()), df0_(f0_.derivative()),
          cap_(upper_cap), theta_(theta), name_(std::move(name)) {
        validate();
    }

    static ReactionProfile kpp() { return {ProfileKind::KPP, Polynomial{0.0, 1.0, -1.0}, 1.0, std::nullopt, "kpp"}; }

    static ReactionProfile monostable() {
        return {ProfileKind::Monostable, Polynomial{0.0, 0.0, 1.0, -1.0}, 1.0, std::nullopt, "monostable"};
    }

    /// u (1 - u) (u - theta)
    static ReactionProfile bistable(double theta) {
        if (!(theta > 0.0 && theta < 1.0)) fail(ErrorKind::Config, "bistable threshold must lie in (0,1)");
        const double roots[] = {0.0, 1.0, theta};
        std::ostringstream name;
        name << "bistable:" << theta;
        return {ProfileKind::Bistable, Polynomial::from_roots(roots, -1.0), 1.0, theta, name.str()};
    }

    /// u (1 - u) (u - 0.2) (1.1 - u) (1.5 - u)
    static ReactionProfile multistable5() {
        const double roots[] = {0.0, 1.0, 0.2, 1.1, 1.5};
        return {ProfileKind::Multistable, Polynomial::from_roots(roots, -1.0), 1.5, std::nullopt, "multistable5"};
    }

    /// Arbitrary polynomial with f(0) = 0. The cap is the largest positive root (1 if none).
    static ReactionProfile polynomial(std::vector<double> coefficients) {
        Polynomial p(std::move(coefficients));
        double cap = 1.0;
        if (!p.is_zero() && p.degree() >= 1) {
            double bound = 1.0;
            for (int k = 0; k < p.degree(); ++k)
                bound = std::max(bound, 1.0 + std::abs(p.coefficient(k) / p.leading()));
            const auto roots = p.roots_in(1e-12, bound, 20000);
            if (!roots.empty()) cap = roots.back();
        }
        std::ostringstream name;
        name << "poly:[";
        for (std::size_t k = 0; k < p.coefficients().size(); ++k) name << (k ? "," : "") << p.coefficients()[k];
        name << "]";
        return {ProfileKind::CustomPolynomial, p, cap, std::nullopt, name.str()};
    }

    /// Catalog names: "kpp", "monostable", "bistable:theta", "multistable5", "poly:[c0,...,cn]".
    static ReactionProfile parse(std::string_view spec);

    ProfileKind kind() const noexcept { return kind_; }
    const Polynomial& f0() const noexcept { return f0_; }
    const Polynomial& F0() const noexcept { return F0_; }
    const Polynomial& df0() const noexcept { return df0_; }
    double upper_cap() const noexcept { return cap_; }
    std::optional<double> theta() const noexcept { return theta_; }
    const std::string& name() const noexcept { return name_; }

    /// Integral of f_0 over [0, 1].
    double positive_mass() const { return f0_.integrate(0.0, 1.0); }

private:
    void validate() const {
        if (f0_.coefficient(0) != 0.0) fail(ErrorKind::Config, "f_0(0) must vanish");
        if (!(cap_ > 0.0) || !std::isfinite(cap_)) fail(ErrorKind::Config, "upper cap M must be positive");
        if (f0_.degree() >= 1 && f0_.leading() > 0.0)
            fail(ErrorKind::Config, "f_0 must be eventually nonpositive (negative leading coefficient)");
        const double span = 10.0 * (1.0 + cap_);
        for (int k = 0; k <= 2000; ++k) {
            const double s = cap_ + span * k / 2000.0;
            if (f0_(s) > 1e-12 * (1.0 + std::abs(s))) fail(ErrorKind::Config, "f_0 must be <= 0 on [M, inf)");
        }
        if (kind_ == ProfileKind::Bistable) {
            const double th = *theta_;
            if (std::abs(f0_(th)) > 1e-14) fail(ErrorKind::Config, "bistable f_0(theta) != 0");
            for (int k = 1; k < 1000; ++k) {
                const double s = th * k / 1000.0;
                if (!(f0_(s) < 0.0)) fail(ErrorKind::Config, "bistable f_0 must be negative on (0, theta)");
                const double t = th + (1.0 - th) * k / 1000.0;
                if (!(f0_(t) > 0.0)) fail(ErrorKind::Config, "bistable f_0 must be positive on (theta, 1)");
            }
        }
    }

    ProfileKind kind_;
    Polynomial f0_;
    Polynomial F0_;
    Polynomial df0_;
    double cap_;
    std::optional<double> theta_;
    std::string name_;
};

inline ReactionProfile ReactionProfile::parse(std::string_view spec) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    spec = trim(spec);
    auto to_double = [&](std::string_view s) {
        const std::string str(trim(s));
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(str, &used);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "bad number '" + str + "' in profile '" + std::string(spec) + "'");
        }
        if (used != str.size()) fail(ErrorKind::Config, "bad number '" + str + "' in profile '" + std::string(spec) + "'");
        return value;
    };
    if (spec == "kpp") return kpp();
    if (spec == "monostable") return monostable();
    if (spec == "multistable5") return multistable5();
    if (spec.starts_with("bistable:")) return bistable(to_double(spec.substr(9)));
    if (spec.starts_with("poly:")) {
        std::string_view body = trim(spec.substr(5));
        if (body.size() < 2 || body.front() != '[' || body.back() != ']')
            fail(ErrorKind::Config, "poly profile expects poly:[c0,...,cn]");
        body = body.substr(1, body.size() - 2);
        std::vector<double> coeffs;
        while (!body.empty()) {
            const auto comma = body.find(',');
            coeffs.push_back(to_double(body.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        if (coeffs.empty()) fail(ErrorKind::Config, "poly profile needs at least one coefficient");
        return polynomial(std::move(coeffs));
    }
    fail(ErrorKind::Config, "unknown profile '" + std::string(spec) + "'");
}

/// Piecewise-constant function of z: `inside` on the open patch, `outside` elsewhere.
struct PatchFunction {
    double left;
    double right;
    double inside;
    double outside;

    double operator()(double z) const noexcept { return (z > left && z < right) ? inside : outside; }
};

/// Heterogeneous nonlinearity f(z,u) = f_0(u) on the open patch (left, right), -delta u outside.
///
/// On the patch f_0 acts on max(u, 0), so F(z, s) = 0 for s < 0 there. Outside the
/// patch the linear law holds for every sign of u.
class ReactionField {
public:
    ReactionField(ReactionProfile profile, double left, double right, double delta)
        : profile_(std::move(profile)), left_(left), right_(right), delta_(delta) {
        if (!(right >= left)) fail(ErrorKind::Config, "patch must satisfy left <= right");
        if (!(delta > 0.0)) fail(ErrorKind::Config, "delta must be positive");
    }

    /// Patch of width `width` centred at 0.
    static ReactionField centered(ReactionProfile profile, double width, double delta) {
        return ReactionField(std::move(profile), -0.5 * width, 0.5 * width, delta);
    }

    const ReactionProfile& profile() const noexcept { return profile_; }
    double left() const noexcept { return left_; }
    double right() const noexcept { return right_; }
    double delta() const noexcept { return delta_; }
    double width() const noexcept { return right_ - left_; }
    double center() const noexcept { return 0.5 * (left_ + right_); }
    double upper_cap() const noexcept { return profile_.upper_cap(); }

    bool in_patch(double z) const noexcept { return z > left_ && z < right_; }

    double f(double z, double u) const noexcept {
        return in_patch(z) ? patch_f(u) : -delta_ * u;
    }

    double F(double z, double u) const noexcept {
        return in_patch(z) ? patch_F(u) : -0.5 * delta_ * u * u;
    }

    double df_du(double z, double u) const noexcept {
        return in_patch(z) ? patch_df(u) : -delta_;
    }

    double patch_f(double u) const noexcept { return u > 0.0 ? profile_.f0()(u) : 0.0; }
    double patch_F(double u) const noexcept { return u > 0.0 ? profile_.F0()(u) : 0.0; }
    /// Right derivative at u = 0.
    double patch_df(double u) const noexcept { return u >= 0.0 ? profile_.df0()(u) : 0.0; }

    /// z -> f_s(z, 0).
    PatchFunction linearization_at_zero() const noexcept {
        return {left_, right_, profile_.df0()(0.0), -delta_};
    }

    /// z -> sup_{s>0} f(z,s)/s. On the patch this is the maximum of f_0(s)/s over (0, M];
    /// beyond M the ratio is nonpositive and cannot exceed the value at s -> 0.
    PatchFunction kpp_majorant_slope() const {
        const double cap = profile_.upper_cap();
        if (!(cap > 0.0) || !std::isfinite(cap)) fail(ErrorKind::MaximizationFailure, "degenerate upper cap");
        const Polynomial ratio = profile_.f0().divided_by_x();
        double best = ratio(0.0);
        auto consider = [&](double s) {
            const double q = ratio(s);
            if (!std::isfinite(q)) fail(ErrorKind::MaximizationFailure, "non-finite ratio f_0(s)/s");
            best = std::max(best, q);
        };
        consider(cap);
        for (double s : ratio.derivative().roots_in(0.0, cap, 4000)) consider(s);
        // dense scan guards against stationary points missed by sign-change detection
        for (int k = 1; k < 4000; ++k) consider(cap * k / 4000.0);
        return {left_, right_, best, -delta_};
    }

private:
    ReactionProfile profile_;
    double left_;
    double right_;
    double delta_;
};

}  // namespace wavelab
