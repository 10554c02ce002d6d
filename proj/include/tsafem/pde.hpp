#ifndef TSAFEM_PDE_HPP
#define TSAFEM_PDE_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsafem/geometry.hpp"

namespace tsafem {

/// Data of -div(A grad u) + b . grad u + c u = f + div fvec with homogeneous
/// Dirichlet conditions. div_A is the vector (div A)_k = sum_j d_j A_jk.
struct PDEData {
    std::function<Mat2(const Vec2&)> A = [](const Vec2&) { return Mat2{{{1.0, 0.0}, {0.0, 1.0}}}; };
    std::function<Vec2(const Vec2&)> div_A = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    std::function<Vec2(const Vec2&)> b = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    std::function<double(const Vec2&)> c = [](const Vec2&) { return 0.0; };
    std::function<double(const Vec2&)> f = [](const Vec2&) { return 0.0; };
    std::function<Vec2(const Vec2&)> fvec = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    std::function<double(const Vec2&)> div_fvec = [](const Vec2&) { return 0.0; };
    /// b vanishes identically, so the bilinear form is symmetric.
    bool symmetric = true;

    /// Exact solution, when known.
    std::function<double(const Vec2&)> u;
    std::function<Vec2(const Vec2&)> grad_u;

    [[nodiscard]] bool has_exact() const { return static_cast<bool>(u) && static_cast<bool>(grad_u); }
};

namespace presets {

inline PDEData sine()
{
    using std::numbers::pi;
    PDEData d;
    d.u = [](const Vec2& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    d.grad_u = [](const Vec2& x) {
        return Vec2{pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), pi * std::sin(pi * x[0]) * std::cos(pi * x[1])};
    };
    d.f = [](const Vec2& x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
    return d;
}

/// u = r^alpha sin(2 phi) (1-x)(1-y) on the unit square; u lies in
/// H^{1+alpha-eps} only, and f is square integrable for alpha > 1.
inline PDEData corner(double alpha)
{
    if (!(alpha > 0.0))
        throw std::invalid_argument("corner preset: alpha must be positive");
    PDEData d;
    struct Parts {
        double a, bb;
        Vec2 ga, gb;
        double lap_a;
    };
    auto parts = [alpha](const Vec2& x) {
        const double r = std::hypot(x[0], x[1]);
        const double phi = std::atan2(x[1], x[0]);
        const double s2 = std::sin(2 * phi), c2 = std::cos(2 * phi);
        const double cp = std::cos(phi), sp = std::sin(phi);
        Parts p{};
        const double ra = std::pow(r, alpha);
        p.a = ra * s2;
        const double dr = alpha * std::pow(r, alpha - 1) * s2;
        const double dphi = 2 * std::pow(r, alpha - 1) * c2;  // (1/r) d/dphi
        p.ga = {dr * cp - dphi * sp, dr * sp + dphi * cp};
        p.lap_a = (alpha * alpha - 4) * std::pow(r, alpha - 2) * s2;
        p.bb = (1 - x[0]) * (1 - x[1]);
        p.gb = {-(1 - x[1]), -(1 - x[0])};
        return p;
    };
    d.u = [parts](const Vec2& x) {
        if (x[0] == 0.0 && x[1] == 0.0)
            return 0.0;
        const auto p = parts(x);
        return p.a * p.bb;
    };
    d.grad_u = [parts](const Vec2& x) {
        if (x[0] == 0.0 && x[1] == 0.0)
            return Vec2{0.0, 0.0};
        const auto p = parts(x);
        return Vec2{p.bb * p.ga[0] + p.a * p.gb[0], p.bb * p.ga[1] + p.a * p.gb[1]};
    };
    d.f = [parts](const Vec2& x) {
        if (x[0] == 0.0 && x[1] == 0.0)
            return 0.0;
        const auto p = parts(x);
        return -(p.bb * p.lap_a + 2 * (p.ga[0] * p.gb[0] + p.ga[1] * p.gb[1]));
    };
    return d;
}

/// Variable symmetric diffusion with convection and reaction; exact
/// solution sin(pi x) sin(pi y).
inline PDEData convection_diffusion()
{
    using std::numbers::pi;
    PDEData d = sine();
    d.symmetric = false;
    d.A = [](const Vec2& x) { return Mat2{{{1 + x[0] / 2, x[1] / 4}, {x[1] / 4, 1 + x[1] / 2}}}; };
    d.div_A = [](const Vec2&) { return Vec2{0.5 + 0.25, 0.5}; };
    d.b = [](const Vec2&) { return Vec2{1.0, 0.5}; };
    d.c = [](const Vec2&) { return 1.0; };
    d.f = [A = d.A, divA = d.div_A](const Vec2& x) {
        const double sx = std::sin(pi * x[0]), cx = std::cos(pi * x[0]);
        const double sy = std::sin(pi * x[1]), cy = std::cos(pi * x[1]);
        const Vec2 g{pi * cx * sy, pi * sx * cy};
        const Mat2 h{{{-pi * pi * sx * sy, pi * pi * cx * cy}, {pi * pi * cx * cy, -pi * pi * sx * sy}}};
        const Mat2 a = A(x);
        const Vec2 da = divA(x);
        double div_flux = da[0] * g[0] + da[1] * g[1];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                div_flux += a[i][j] * h[i][j];
        return -div_flux + 1.0 * g[0] + 0.5 * g[1] + sx * sy;
    };
    return d;
}

/// Poisson problem with a vector load fvec = (x y, x + y^2).
inline PDEData flux_load()
{
    using std::numbers::pi;
    PDEData d = sine();
    d.fvec = [](const Vec2& x) { return Vec2{x[0] * x[1], x[0] + x[1] * x[1]}; };
    d.div_fvec = [](const Vec2& x) { return 3 * x[1]; };
    d.f = [](const Vec2& x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]) - 3 * x[1]; };
    return d;
}

}  // namespace presets

/// Named PDE presets:
///   sine                   (no parameters)
///   corner      alpha      (default 1.5)
///   convdiff               (no parameters)
///   fluxload               (no parameters)
inline PDEData make_pde(const std::string& name, const std::vector<double>& params)
{
    auto need_at_most = [&](std::size_t n) {
        if (params.size() > n)
            throw std::invalid_argument("pde '" + name + "' takes at most " + std::to_string(n) + " parameters");
    };
    if (name == "sine") {
        need_at_most(0);
        return presets::sine();
    }
    if (name == "corner") {
        need_at_most(1);
        return presets::corner(params.empty() ? 1.5 : params[0]);
    }
    if (name == "convdiff") {
        need_at_most(0);
        return presets::convection_diffusion();
    }
    if (name == "fluxload") {
        need_at_most(0);
        return presets::flux_load();
    }
    throw std::invalid_argument("unknown pde preset '" + name + "'");
}

}  // namespace tsafem

#endif  // TSAFEM_PDE_HPP
