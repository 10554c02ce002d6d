#ifndef TSAFEM_ESTIMATOR_HPP
#define TSAFEM_ESTIMATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tsafem/fem.hpp"

namespace tsafem {

/// Common part of the boundaries of two abutting elements: first lies below
/// the line t_direction = position, second above; the segment spans
/// [from, to] in the other direction.
struct FacetSegment {
    ElementId first = -1;
    ElementId second = -1;
    int direction = 0;
    Dyadic position;
    Dyadic from;
    Dyadic to;

    [[nodiscard]] Dyadic length() const { return to - from; }
};

/// All interior facet segments, ordered by (first, direction, from).
inline std::vector<FacetSegment> facet_segments(const TMesh<2>& mesh)
{
    std::vector<FacetSegment> out;
    const auto& dom = mesh.domain();
    for (ElementId e : mesh.elements()) {
        const auto& b = mesh.box(e);
        const auto near = mesh.touching(b);
        for (int i = 0; i < 2; ++i) {
            if (b.upper[i] == Dyadic(dom.sizes[i]))
                continue;
            const int j = 1 - i;
            const auto first = out.size();
            for (ElementId o : near) {
                const auto& ob = mesh.box(o);
                if (ob.lower[i] != b.upper[i])
                    continue;
                const Dyadic lo = std::max(b.lower[j], ob.lower[j]);
                const Dyadic hi = std::min(b.upper[j], ob.upper[j]);
                if (lo < hi)
                    out.push_back({e, o, i, b.upper[i], lo, hi});
            }
            std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                      [](const FacetSegment& x, const FacetSegment& y) { return x.from < y.from; });
        }
    }
    return out;
}

struct EstimatorOptions {
    /// Polynomial degrees of the oscillation projections; values <= 0 select
    /// 2 p_i - 1.
    std::array<int, 2> orders{0, 0};
    /// Gauss points per direction; 0 selects max(p_i + 4, q_i + 1).
    int points = 0;
};

/// Per-element squared indicators, split into volume and jump parts, in the
/// order of mesh.elements().
struct IndicatorField {
    std::vector<ElementId> ids;
    std::vector<double> volume;
    std::vector<double> jump;

    [[nodiscard]] std::size_t size() const { return ids.size(); }
    [[nodiscard]] double local(std::size_t k) const { return volume[k] + jump[k]; }
    [[nodiscard]] std::vector<double> squared() const
    {
        std::vector<double> s(ids.size());
        for (std::size_t k = 0; k < s.size(); ++k)
            s[k] = local(k);
        return s;
    }
    [[nodiscard]] double volume_total() const { return sum(volume); }
    [[nodiscard]] double jump_total() const { return sum(jump); }
    /// eta^2, the sum of all local contributions.
    [[nodiscard]] double total() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < ids.size(); ++k)
            s += local(k);
        return s;
    }
    [[nodiscard]] double eta() const { return std::sqrt(total()); }

private:
    static double sum(const std::vector<double>& v)
    {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s;
    }
};

/// Per-element squared oscillations: element part and the sum of its edge
/// parts.
struct OscillationField {
    std::vector<ElementId> ids;
    std::vector<double> element;
    std::vector<double> edge;
    std::array<int, 2> orders{};

    [[nodiscard]] double total() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < ids.size(); ++k)
            s += element[k] + edge[k];
        return s;
    }
    [[nodiscard]] double osc() const { return std::sqrt(total()); }
};

namespace detail {

/// Legendre polynomials P_0..P_n at s in [-1, 1].
inline void legendre(int n, double s, double* out)
{
    out[0] = 1.0;
    if (n >= 1)
        out[1] = s;
    for (int k = 2; k <= n; ++k)
        out[k] = ((2.0 * k - 1.0) * s * out[k - 1] - (k - 1.0) * out[k - 2]) / k;
}

/// Squared weighted L2 norm of (1 - P) r, P the weighted L2 projection onto
/// span of the columns of phi.
inline double projection_residual(const Eigen::MatrixXd& phi, const Eigen::VectorXd& w, const Eigen::VectorXd& r)
{
    const Eigen::MatrixXd gram = phi.transpose() * w.asDiagonal() * phi;
    const Eigen::VectorXd rhs = phi.transpose() * w.cwiseProduct(r);
    const Eigen::VectorXd c = gram.ldlt().solve(rhs);
    const Eigen::VectorXd e = r - phi * c;
    return e.dot(w.cwiseProduct(e));
}

inline int resolve_order(int q, int p) { return q > 0 ? q : 2 * p - 1; }

struct ResidualPass {
    IndicatorField ind;
    OscillationField osc;
};

inline ResidualPass residual_pass(const DiscreteSolution& sol, const PDEData& pde, const GeometryMap& geo,
                                  const EstimatorOptions& opt, bool with_osc)
{
    const auto& basis = *sol.basis;
    const auto& mesh = basis.mesh_ref();
    const auto& dom = basis.domain();
    const auto elems = mesh.elements();
    const std::array<int, 2> q{resolve_order(opt.orders[0], dom.degrees[0]), resolve_order(opt.orders[1], dom.degrees[1])};
    std::array<int, 2> npts{};
    for (int i = 0; i < 2; ++i)
        npts[static_cast<std::size_t>(i)] = opt.points > 0 ? opt.points : std::max(dom.degrees[i] + 4, q[static_cast<std::size_t>(i)] + 1);

    std::vector<int> pos(mesh.node_count(), -1);
    for (std::size_t k = 0; k < elems.size(); ++k)
        pos[static_cast<std::size_t>(elems[k])] = static_cast<int>(k);

    ResidualPass out;
    out.ind.ids.assign(elems.begin(), elems.end());
    out.ind.volume.assign(elems.size(), 0.0);
    out.ind.jump.assign(elems.size(), 0.0);
    out.osc.ids = out.ind.ids;
    out.osc.element.assign(elems.size(), 0.0);
    out.osc.edge.assign(elems.size(), 0.0);
    out.osc.orders = q;
    std::vector<double> vol(elems.size(), 0.0);

    parallel_for(elems.size(), [&](std::size_t k) {
        const auto pts = element_fields(sol, geo, elems[k], npts[0], npts[1], true);
        const auto& box = mesh.box(elems[k]);
        const std::size_t m = pts.size();
        Eigen::VectorXd w(static_cast<Eigen::Index>(m)), r(static_cast<Eigen::Index>(m));
        double area = 0.0, res = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            const auto& fp = pts[a];
            const Vec2& x = fp.geo.x;
            const Mat2 A = pde.A(x);
            const Vec2 divA = pde.div_A(x);
            const Vec2 b = pde.b(x);
            double div_flux = divA[0] * fp.grad[0] + divA[1] * fp.grad[1] + pde.div_fvec(x);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    div_flux += A[i][j] * fp.hess[i][j];
            const double R = pde.f(x) + div_flux - b[0] * fp.grad[0] - b[1] * fp.grad[1] - pde.c(x) * fp.u;
            w[static_cast<Eigen::Index>(a)] = fp.weight;
            r[static_cast<Eigen::Index>(a)] = R;
            area += fp.weight;
            res += fp.weight * R * R;
        }
        vol[k] = area;
        out.ind.volume[k] = area * res;
        if (with_osc) {
            const int n0 = q[0] + 1, n1 = q[1] + 1;
            Eigen::MatrixXd phi(static_cast<Eigen::Index>(m), n0 * n1);
            std::vector<double> l0(static_cast<std::size_t>(n0)), l1(static_cast<std::size_t>(n1));
            const double a0 = box.lower[0].to_double(), s0 = box.side(0).to_double();
            const double a1 = box.lower[1].to_double(), s1 = box.side(1).to_double();
            for (std::size_t a = 0; a < m; ++a) {
                legendre(q[0], 2.0 * (pts[a].geo.t[0] - a0) / s0 - 1.0, l0.data());
                legendre(q[1], 2.0 * (pts[a].geo.t[1] - a1) / s1 - 1.0, l1.data());
                for (int u = 0; u < n0; ++u)
                    for (int v = 0; v < n1; ++v)
                        phi(static_cast<Eigen::Index>(a), u * n1 + v) =
                            l0[static_cast<std::size_t>(u)] * l1[static_cast<std::size_t>(v)];
            }
            out.osc.element[k] = area * projection_residual(phi, w, r);
        }
    });

    const auto segs = facet_segments(mesh);
    std::vector<double> seg_jump(segs.size(), 0.0), seg_osc(segs.size(), 0.0);
    parallel_for(segs.size(), [&](std::size_t s) {
        const auto& sg = segs[s];
        const int i = sg.direction, j = 1 - i;
        const int n = npts[static_cast<std::size_t>(j)];
        std::vector<int> both = basis.supported_on(sg.first);
        both.insert(both.end(), basis.supported_on(sg.second).begin(), basis.supported_on(sg.second).end());
        std::vector<double> tp, tw;
        composite_gauss(n, knot_breaks(basis, both, j, sg.from.to_double(), sg.to.to_double()), tp, tw);
        const std::vector<double> fixed{sg.position.to_double()};
        auto side = [&](ElementId e) {
            return i == 0 ? ElementBasisTable(basis, e, fixed, tp) : ElementBasisTable(basis, e, tp, fixed);
        };
        const ElementBasisTable t1 = side(sg.first), t2 = side(sg.second);
        auto grad_t = [&](const ElementBasisTable& tab, std::size_t a_pt) {
            Vec2 g{};
            for (std::size_t a = 0; a < tab.size(); ++a) {
                const double c = sol.coefficient(tab.anchors()[a]);
                if (c == 0.0)
                    continue;
                const Vec2 ga = i == 0 ? tab.grad(a, 0, a_pt) : tab.grad(a, a_pt, 0);
                g[0] += c * ga[0];
                g[1] += c * ga[1];
            }
            return g;
        };
        const auto np = static_cast<Eigen::Index>(tp.size());
        Eigen::VectorXd w(np), r(np);
        Eigen::MatrixXd phi(np, q[static_cast<std::size_t>(j)] + 1);
        std::vector<double> lp(static_cast<std::size_t>(q[static_cast<std::size_t>(j)] + 1));
        const double lo = sg.from.to_double(), len = sg.length().to_double();
        double acc = 0.0;
        for (std::size_t a = 0; a < tp.size(); ++a) {
            Vec2 t{};
            t[static_cast<std::size_t>(i)] = fixed[0];
            t[static_cast<std::size_t>(j)] = tp[a];
            const auto g = geometry_at(geo, t, false);
            // Outward normal of the first element: J^{-T} e_i normalized.
            Vec2 nu{g.jac_inv[static_cast<std::size_t>(i)][0], g.jac_inv[static_cast<std::size_t>(i)][1]};
            const double nn = std::hypot(nu[0], nu[1]);
            nu = {nu[0] / nn, nu[1] / nn};
            const double ds = tw[a] * std::hypot(g.jac[0][static_cast<std::size_t>(j)], g.jac[1][static_cast<std::size_t>(j)]);
            const Vec2 g1 = physical_gradient(g, grad_t(t1, a));
            const Vec2 g2 = physical_gradient(g, grad_t(t2, a));
            const Mat2 A = pde.A(g.x);
            // The load fvec cancels in the two-sided jump.
            const Vec2 d{g1[0] - g2[0], g1[1] - g2[1]};
            const double J = (A[0][0] * d[0] + A[0][1] * d[1]) * nu[0] + (A[1][0] * d[0] + A[1][1] * d[1]) * nu[1];
            w[static_cast<Eigen::Index>(a)] = ds;
            r[static_cast<Eigen::Index>(a)] = J;
            acc += ds * J * J;
            legendre(q[static_cast<std::size_t>(j)], 2.0 * (tp[a] - lo) / len - 1.0, lp.data());
            for (Eigen::Index u = 0; u < phi.cols(); ++u)
                phi(static_cast<Eigen::Index>(a), u) = lp[static_cast<std::size_t>(u)];
        }
        seg_jump[s] = acc;
        if (with_osc)
            seg_osc[s] = projection_residual(phi, w, r);
    });
    // Each segment belongs to the boundary of both adjacent elements.
    for (std::size_t s = 0; s < segs.size(); ++s)
        for (ElementId e : {segs[s].first, segs[s].second}) {
            const auto k = static_cast<std::size_t>(pos[static_cast<std::size_t>(e)]);
            out.ind.jump[k] += std::sqrt(vol[k]) * seg_jump[s];
            out.osc.edge[k] += std::sqrt(vol[k]) * seg_osc[s];
        }
    return out;
}

}  // namespace detail

/// Residual indicators eta(T)^2 = |T| ||R||^2_T + |T|^{1/2} ||[(A grad U + fvec) . nu]||^2_{dT in Omega}.
inline IndicatorField estimate(const DiscreteSolution& sol, const PDEData& pde, const GeometryMap& geo,
                               const EstimatorOptions& opt = {})
{
    return detail::residual_pass(sol, pde, geo, opt, false).ind;
}

/// Data oscillations: the parts of the residual and the jumps not captured by
/// local L2 projections onto transformed polynomials of degree q_i.
inline OscillationField oscillations(const DiscreteSolution& sol, const PDEData& pde, const GeometryMap& geo,
                                     const EstimatorOptions& opt = {})
{
    return detail::residual_pass(sol, pde, geo, opt, true).osc;
}

/// Both fields in one pass over the mesh.
inline std::pair<IndicatorField, OscillationField> estimate_with_oscillations(const DiscreteSolution& sol,
                                                                              const PDEData& pde,
                                                                              const GeometryMap& geo,
                                                                              const EstimatorOptions& opt = {})
{
    auto r = detail::residual_pass(sol, pde, geo, opt, true);
    return {std::move(r.ind), std::move(r.osc)};
}

}  // namespace tsafem

#endif  // TSAFEM_ESTIMATOR_HPP
