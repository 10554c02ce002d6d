#ifndef TSAFEM_ELEMENT_EVAL_HPP
#define TSAFEM_ELEMENT_EVAL_HPP

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "tsafem/basis.hpp"
#include "tsafem/geometry.hpp"
#include "tsafem/quadrature.hpp"

namespace tsafem {

/// Geometry at one parameter point: image, Jacobian, its inverse, |det| and
/// the map's second derivatives.
struct GeometryPoint {
    Vec2 t{};
    Vec2 x{};
    Mat2 jac{};
    Mat2 jac_inv{};
    double det_jac = 0.0;
    std::array<Mat2, 2> hess{};
};

inline GeometryPoint geometry_at(const GeometryMap& g, const Vec2& t, bool with_hessian)
{
    GeometryPoint q;
    q.t = t;
    q.x = g.map_point(t);
    q.jac = g.jacobian(t);
    q.det_jac = det(q.jac);
    if (!(q.det_jac > 0.0))
        throw std::domain_error("geometry: non-positive Jacobian determinant");
    q.jac_inv = inverse(q.jac);
    if (with_hessian)
        q.hess = g.hessian(t);
    return q;
}

/// Physical gradient J^{-T} g_t.
inline Vec2 physical_gradient(const GeometryPoint& q, const Vec2& gt)
{
    return {q.jac_inv[0][0] * gt[0] + q.jac_inv[1][0] * gt[1], q.jac_inv[0][1] * gt[0] + q.jac_inv[1][1] * gt[1]};
}

/// Physical Hessian J^{-T} (H_t - sum_k g_k H gamma_k) J^{-1}.
inline Mat2 physical_hessian(const GeometryPoint& q, const Mat2& ht, const Vec2& gx)
{
    Mat2 m{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            m[a][b] = ht[a][b] - gx[0] * q.hess[0][a][b] - gx[1] * q.hess[1][a][b];
    Mat2 out{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    s += q.jac_inv[a][i] * m[a][b] * q.jac_inv[b][j];
            out[i][j] = s;
        }
    return out;
}

/// One-dimensional B-spline jets of the functions supported on an element,
/// at tensor points (xs, ys). Tensor products give values and derivatives.
class ElementBasisTable {
public:
    ElementBasisTable(const TSplineBasis<2>& basis, ElementId e, const std::vector<double>& xs,
                      const std::vector<double>& ys)
        : anchors_(basis.supported_on(e)), nx_(xs.size()), ny_(ys.size())
    {
        jx_.resize(anchors_.size() * nx_);
        jy_.resize(anchors_.size() * ny_);
        for (std::size_t a = 0; a < anchors_.size(); ++a) {
            const auto kx = basis.knots(anchors_[a], 0);
            const auto ky = basis.knots(anchors_[a], 1);
            for (std::size_t i = 0; i < nx_; ++i)
                jx_[a * nx_ + i] = bspline_jet(kx, xs[i]);
            for (std::size_t j = 0; j < ny_; ++j)
                jy_[a * ny_ + j] = bspline_jet(ky, ys[j]);
        }
    }

    [[nodiscard]] const std::vector<int>& anchors() const { return anchors_; }
    [[nodiscard]] std::size_t size() const { return anchors_.size(); }

    [[nodiscard]] double value(std::size_t a, std::size_t i, std::size_t j) const
    {
        return jx_[a * nx_ + i].value * jy_[a * ny_ + j].value;
    }
    [[nodiscard]] Vec2 grad(std::size_t a, std::size_t i, std::size_t j) const
    {
        const auto& x = jx_[a * nx_ + i];
        const auto& y = jy_[a * ny_ + j];
        return {x.d1 * y.value, x.value * y.d1};
    }
    [[nodiscard]] Mat2 hess(std::size_t a, std::size_t i, std::size_t j) const
    {
        const auto& x = jx_[a * nx_ + i];
        const auto& y = jy_[a * ny_ + j];
        const double m = x.d1 * y.d1;
        return {{{x.d2 * y.value, m}, {m, x.value * y.d2}}};
    }

private:
    std::vector<int> anchors_;
    std::size_t nx_, ny_;
    std::vector<BSplineJet> jx_, jy_;
};

/// Breakpoints of [lo, hi] in direction i: the bounds plus every knot of a
/// function in `anchors` strictly inside. Supported functions are polynomial
/// between consecutive breakpoints; knot lines need not be mesh lines.
inline std::vector<double> knot_breaks(const TSplineBasis<2>& basis, const std::vector<int>& anchors, int i, double lo,
                                       double hi)
{
    std::vector<double> out{lo, hi};
    for (int a : anchors)
        for (double k : basis.knots(a, i))
            if (lo < k && k < hi)
                out.push_back(k);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// n Gauss points on each piece of a partition.
inline void composite_gauss(int n, const std::vector<double>& breaks, std::vector<double>& pts, std::vector<double>& wts)
{
    pts.clear();
    wts.clear();
    std::vector<double> p, w;
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        gauss_on_interval(n, breaks[s], breaks[s + 1], p, w);
        pts.insert(pts.end(), p.begin(), p.end());
        wts.insert(wts.end(), w.begin(), w.end());
    }
}

/// Tensor Gauss rule on an element box in the parameter domain.
struct ElementRule {
    std::vector<double> xs, wx, ys, wy;

    ElementRule(const DyadicBox<2>& box, int nx, int ny)
    {
        gauss_on_interval(nx, box.lower[0].to_double(), box.upper[0].to_double(), xs, wx);
        gauss_on_interval(ny, box.lower[1].to_double(), box.upper[1].to_double(), ys, wy);
    }

    /// Composite rule over the sub-cells cut by knot lines of the supported functions.
    ElementRule(const TSplineBasis<2>& basis, ElementId e, int nx, int ny)
    {
        const auto& box = basis.mesh_ref().box(e);
        const auto& s = basis.supported_on(e);
        composite_gauss(nx, knot_breaks(basis, s, 0, box.lower[0].to_double(), box.upper[0].to_double()), xs, wx);
        composite_gauss(ny, knot_breaks(basis, s, 1, box.lower[1].to_double(), box.upper[1].to_double()), ys, wy);
    }
};

}  // namespace tsafem

#endif  // TSAFEM_ELEMENT_EVAL_HPP
