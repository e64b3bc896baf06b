#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wavelab/error.hpp"
#include "wavelab/reaction.hpp"

namespace wavelab {

/// Largest exponent allowed for the weight e^{c z / 2} before a domain/speed pair is rejected.
inline constexpr double kSafeExponent = 700.0;

/// Uniform mesh z_i = z_min + i h, i = 0..n-1.
struct Grid {
    double z_min = 0.0;
    double z_max = 1.0;
    std::size_t n = 3;

    static Grid uniform(double z_min, double z_max, std::size_t n) {
        if (n < 3) fail(ErrorKind::Config, "grid needs at least 3 nodes");
        if (!(z_max > z_min)) fail(ErrorKind::Config, "grid needs z_max > z_min");
        return Grid{z_min, z_max, n};
    }

    /// [-L/2, L/2] with spacing as close to h as the node count allows.
    static Grid centered(double length, double h) {
        if (!(length > 0.0) || !(h > 0.0)) fail(ErrorKind::Config, "domain length and spacing must be positive");
        const auto cells = static_cast<std::size_t>(std::llround(length / h));
        return uniform(-0.5 * length, 0.5 * length, std::max<std::size_t>(cells, 2) + 1);
    }

    /// Centered grid whose nodes hit both patch edges.
    static Grid aligned(double length, double h, const ReactionField& rf) {
        Grid g = centered(length, h);
        for (double edge : {rf.left(), rf.right()}) {
            if (edge <= g.z_min || edge >= g.z_max) fail(ErrorKind::Config, "patch must lie inside the domain");
            const double k = std::round((edge - g.z_min) / g.h());
            if (std::abs(g.z(static_cast<std::size_t>(k)) - edge) > 1e-12 * std::max(1.0, std::abs(edge)))
                fail(ErrorKind::Config, "patch edge does not fall on a grid node");
        }
        return g;
    }

    double h() const noexcept { return (z_max - z_min) / static_cast<double>(n - 1); }
    double z(std::size_t i) const noexcept { return i + 1 == n ? z_max : z_min + static_cast<double>(i) * h(); }
    double length() const noexcept { return z_max - z_min; }

    /// Composite trapezoid weight of node i.
    double weight(std::size_t i) const noexcept { return (i == 0 || i + 1 == n) ? 0.5 * h() : h(); }

    std::vector<double> nodes() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = z(i);
        return out;
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Nodal values on a grid.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.n, fill) {}
    Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.n) fail(ErrorKind::Config, "field length does not match grid");
    }

    template <class Fn>
    static Field from_function(const Grid& g, Fn&& fn) {
        Field out(g);
        for (std::size_t i = 0; i < g.n; ++i) out.values[i] = fn(g.z(i));
        return out;
    }

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) noexcept { return values[i]; }
    double operator[](std::size_t i) const noexcept { return values[i]; }
    std::span<const double> span() const noexcept { return values; }

    double sup_norm() const noexcept {
        double m = 0.0;
        for (double x : values) m = std::max(m, std::abs(x));
        return m;
    }
    double min() const noexcept { return *std::min_element(values.begin(), values.end()); }
    bool finite() const noexcept {
        return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
    }
};

inline Field operator-(const Field& a, const Field& b) {
    Field out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

/// Rejects speed/domain pairs whose weight e^{c z/2} leaves the representable range.
inline void check_weight_range(const Grid& g, double c) {
    if (c < 0.0) fail(ErrorKind::Config, "frame speed c must be nonnegative");
    const double extent = std::max(std::abs(g.z_min), std::abs(g.z_max));
    if (0.5 * c * extent > kSafeExponent)
        fail(ErrorKind::Overflow, "c * max|z| / 2 exceeds the safe exponent range");
}

/// v = e^{cz/2} u.
inline Field to_v(const Field& u, double c) {
    check_weight_range(u.grid, c);
    Field v(u.grid);
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::exp(0.5 * c * u.grid.z(i)) * u[i];
    return v;
}

inline Field from_v(const Field& v, double c) {
    check_weight_range(v.grid, c);
    Field u(v.grid);
    for (std::size_t i = 0; i < v.size(); ++i) u[i] = std::exp(-0.5 * c * v.grid.z(i)) * v[i];
    return u;
}

/// Trapezoid integral of u.
inline double integrate(const Field& u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u.grid.weight(i) * u[i];
    return acc;
}

/// Trapezoid quadrature of e^{cz} u w, evaluated as v_u v_w.
inline double weighted_dot(const Field& u, const Field& w, double c) {
    const Field vu = to_v(u, c);
    const Field vw = to_v(w, c);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u.grid.weight(i) * vu[i] * vw[i];
    return acc;
}

/// ||u||^2 in L^2_c.
inline double weighted_l2_sq(const Field& u, double c) { return weighted_dot(u, u, c); }

/// Cellwise quadrature of e^{cz} u_z^2 with the weight taken at cell midpoints:
/// e^{c z_{i+1/2}} (u_{i+1} - u_i)^2 = (e^{-ch/4} v_{i+1} - e^{ch/4} v_i)^2.
inline double weighted_gradient_sq(const Field& u, double c) {
    const Field v = to_v(u, c);
    const double h = u.grid.h();
    const double ep = std::exp(0.25 * c * h);
    const double em = std::exp(-0.25 * c * h);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double d = em * v[i + 1] - ep * v[i];
        acc += d * d / h;
    }
    return acc;
}

/// ||u||^2 in H^1_c.
inline double weighted_h1_sq(const Field& u, double c) { return weighted_l2_sq(u, c) + weighted_gradient_sq(u, c); }

/// Direct e^{cz}-weighted trapezoid; only usable where e^{c z} is representable.
inline double weighted_l2_sq_direct(const Field& u, double c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += u.grid.weight(i) * std::exp(c * u.grid.z(i)) * u[i] * u[i];
    return acc;
}

/// Second-order central differences; second-order one-sided stencils at the ends.
inline Field diff_central(const Field& u) {
    const std::size_t n = u.size();
    const double h = u.grid.h();
    Field d(u.grid);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    return d;
}

inline void write_csv(std::ostream& os, const Field& u, const std::string& value_name = "u") {
    os << "z," << value_name << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < u.size(); ++i) os << u.grid.z(i) << ',' << u[i] << '\n';
}

inline void write_csv(const std::string& path, const Field& u) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Config, "cannot open " + path + " for writing");
    write_csv(os, u);
}

/// Reads a "z,u" CSV written by write_csv; the nodes must be uniformly spaced.
inline Field read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) fail(ErrorKind::Config, "empty field CSV");
    std::vector<double> z, u;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        double a = 0.0, b = 0.0;
        char comma = 0;
        if (!(row >> a >> comma >> b) || comma != ',') fail(ErrorKind::Config, "malformed CSV row: " + line);
        z.push_back(a);
        u.push_back(b);
    }
    if (z.size() < 3) fail(ErrorKind::Config, "field CSV needs at least 3 rows");
    const Grid g = Grid::uniform(z.front(), z.back(), z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        if (std::abs(g.z(i) - z[i]) > 1e-9 * g.h()) fail(ErrorKind::Config, "field CSV nodes are not uniform");
    return Field(g, std::move(u));
}

}  // namespace wavelab
