#ifndef TSAFEM_GEOMETRY_HPP
#define TSAFEM_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsafem {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

/// Parametrization x = gamma(t) of the physical domain over the 2D parameter
/// domain, with first and second derivatives. jacobian()[k][a] = d gamma_k /
/// d t_a and hessian()[k][a][b] = d^2 gamma_k / d t_a d t_b.
class GeometryMap {
public:
    virtual ~GeometryMap() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual Vec2 map_point(const Vec2& t) const = 0;
    [[nodiscard]] virtual Mat2 jacobian(const Vec2& t) const = 0;
    [[nodiscard]] virtual std::array<Mat2, 2> hessian(const Vec2& t) const = 0;
};

inline double det(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

inline Mat2 inverse(const Mat2& m)
{
    const double d = det(m);
    if (d == 0.0)
        throw std::domain_error("inverse: singular 2x2 matrix");
    return {{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
}

inline Mat2 multiply(const Mat2& a, const Mat2& b)
{
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

class IdentityMap final : public GeometryMap {
public:
    [[nodiscard]] std::string name() const override { return "identity"; }
    [[nodiscard]] Vec2 map_point(const Vec2& t) const override { return t; }
    [[nodiscard]] Mat2 jacobian(const Vec2&) const override { return {{{1.0, 0.0}, {0.0, 1.0}}}; }
    [[nodiscard]] std::array<Mat2, 2> hessian(const Vec2&) const override { return {}; }
};

/// x = M t + s.
class AffineMap final : public GeometryMap {
public:
    AffineMap(const Mat2& m, const Vec2& shift) : m_(m), s_(shift)
    {
        if (det(m_) <= 0.0)
            throw std::invalid_argument("AffineMap: matrix must have positive determinant");
    }
    [[nodiscard]] std::string name() const override { return "affine"; }
    [[nodiscard]] Vec2 map_point(const Vec2& t) const override
    {
        return {m_[0][0] * t[0] + m_[0][1] * t[1] + s_[0], m_[1][0] * t[0] + m_[1][1] * t[1] + s_[1]};
    }
    [[nodiscard]] Mat2 jacobian(const Vec2&) const override { return m_; }
    [[nodiscard]] std::array<Mat2, 2> hessian(const Vec2&) const override { return {}; }

private:
    Mat2 m_;
    Vec2 s_;
};

/// Bilinear quadrilateral through four corners (counter-clockwise, starting
/// at the image of the origin) over the parameter box [0,N1] x [0,N2].
class BilinearMap final : public GeometryMap {
public:
    BilinearMap(const std::array<Vec2, 4>& corners, const Vec2& extent) : c_(corners), n_(extent) {}
    [[nodiscard]] std::string name() const override { return "bilinear"; }
    [[nodiscard]] Vec2 map_point(const Vec2& t) const override
    {
        const double u = t[0] / n_[0], v = t[1] / n_[1];
        Vec2 x{};
        for (int k = 0; k < 2; ++k)
            x[k] = (1 - u) * (1 - v) * c_[0][k] + u * (1 - v) * c_[1][k] + u * v * c_[2][k] + (1 - u) * v * c_[3][k];
        return x;
    }
    [[nodiscard]] Mat2 jacobian(const Vec2& t) const override
    {
        const double u = t[0] / n_[0], v = t[1] / n_[1];
        Mat2 j{};
        for (int k = 0; k < 2; ++k) {
            j[k][0] = ((1 - v) * (c_[1][k] - c_[0][k]) + v * (c_[2][k] - c_[3][k])) / n_[0];
            j[k][1] = ((1 - u) * (c_[3][k] - c_[0][k]) + u * (c_[2][k] - c_[1][k])) / n_[1];
        }
        return j;
    }
    [[nodiscard]] std::array<Mat2, 2> hessian(const Vec2&) const override
    {
        std::array<Mat2, 2> h{};
        for (int k = 0; k < 2; ++k) {
            const double mixed = (c_[0][k] - c_[1][k] + c_[2][k] - c_[3][k]) / (n_[0] * n_[1]);
            h[k][0][1] = h[k][1][0] = mixed;
        }
        return h;
    }

private:
    std::array<Vec2, 4> c_;
    Vec2 n_;
};

/// Quarter annulus r in [r0, r1], phi in [0, pi/2]; t_1 runs radially and
/// t_2 angularly over [0,N1] x [0,N2].
class QuarterAnnulusMap final : public GeometryMap {
public:
    QuarterAnnulusMap(double r0, double r1, const Vec2& extent) : r0_(r0), r1_(r1), n_(extent)
    {
        if (!(r0 > 0.0 && r1 > r0))
            throw std::invalid_argument("QuarterAnnulusMap: need 0 < r0 < r1");
    }
    [[nodiscard]] std::string name() const override { return "annulus"; }
    [[nodiscard]] Vec2 map_point(const Vec2& t) const override
    {
        const double r = radius(t), phi = angle(t);
        return {r * std::cos(phi), r * std::sin(phi)};
    }
    [[nodiscard]] Mat2 jacobian(const Vec2& t) const override
    {
        const double r = radius(t), phi = angle(t);
        const double dr = (r1_ - r0_) / n_[0], dphi = std::numbers::pi / 2 / n_[1];
        return {{{dr * std::cos(phi), -r * std::sin(phi) * dphi}, {dr * std::sin(phi), r * std::cos(phi) * dphi}}};
    }
    [[nodiscard]] std::array<Mat2, 2> hessian(const Vec2& t) const override
    {
        const double r = radius(t), phi = angle(t);
        const double dr = (r1_ - r0_) / n_[0], dphi = std::numbers::pi / 2 / n_[1];
        const double c = std::cos(phi), s = std::sin(phi);
        std::array<Mat2, 2> h{};
        h[0][0][0] = 0.0;
        h[0][0][1] = h[0][1][0] = -dr * s * dphi;
        h[0][1][1] = -r * c * dphi * dphi;
        h[1][0][0] = 0.0;
        h[1][0][1] = h[1][1][0] = dr * c * dphi;
        h[1][1][1] = -r * s * dphi * dphi;
        return h;
    }

private:
    [[nodiscard]] double radius(const Vec2& t) const { return r0_ + (r1_ - r0_) * t[0] / n_[0]; }
    [[nodiscard]] double angle(const Vec2& t) const { return std::numbers::pi / 2 * t[1] / n_[1]; }
    double r0_, r1_;
    Vec2 n_;
};

/// Builds a built-in map from its name and numeric parameters.
///   identity
///   affine    m11 m12 m21 m22 s1 s2
///   bilinear  x0 y0 x1 y1 x2 y2 x3 y3
///   annulus   r0 r1
inline std::shared_ptr<const GeometryMap> make_geometry(const std::string& name, const std::vector<double>& params,
                                                        const Vec2& extent)
{
    auto need = [&](std::size_t n) {
        if (params.size() != n)
            throw std::invalid_argument("geometry '" + name + "' expects " + std::to_string(n) + " parameters");
    };
    if (name == "identity") {
        need(0);
        return std::make_shared<IdentityMap>();
    }
    if (name == "affine") {
        need(6);
        return std::make_shared<AffineMap>(Mat2{{{params[0], params[1]}, {params[2], params[3]}}}, Vec2{params[4], params[5]});
    }
    if (name == "bilinear") {
        need(8);
        return std::make_shared<BilinearMap>(
            std::array<Vec2, 4>{Vec2{params[0], params[1]}, Vec2{params[2], params[3]}, Vec2{params[4], params[5]},
                                Vec2{params[6], params[7]}},
            extent);
    }
    if (name == "annulus") {
        need(2);
        return std::make_shared<QuarterAnnulusMap>(params[0], params[1], extent);
    }
    throw std::invalid_argument("unknown geometry '" + name + "'");
}

}  // namespace tsafem

#endif  // TSAFEM_GEOMETRY_HPP
