#ifndef TSAFEM_FEM_HPP
#define TSAFEM_FEM_HPP

#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "tsafem/basis.hpp"
#include "tsafem/element_eval.hpp"
#include "tsafem/geometry.hpp"
#include "tsafem/parallel.hpp"
#include "tsafem/pde.hpp"

namespace tsafem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct FemOptions {
    /// Gauss points per direction are p_i + assembly_extra.
    int assembly_extra = 2;
    /// Gauss points per direction for error norms are p_i + error_extra.
    int error_extra = 4;
    /// Relative residual accepted from the linear solver.
    double tolerance = 1e-10;
};

struct SparseSystem {
    SparseMatrix K;
    Vector F;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// U = sum over interior anchors of coeffs[dof] * B_z, pulled to the
/// physical domain by the geometry.
struct DiscreteSolution {
    std::shared_ptr<const TSplineBasis<2>> basis;
    Vector coeffs;

    [[nodiscard]] double coefficient(int anchor) const
    {
        const int k = basis->dof(anchor);
        return k < 0 ? 0.0 : coeffs[k];
    }
};

/// Solution and geometry at one quadrature point. weight includes det Dγ.
struct FieldPoint {
    GeometryPoint geo;
    double weight = 0.0;
    double u = 0.0;
    Vec2 grad{};
    Mat2 hess{};
};

/// Tensor quadrature of an element: geometry, U, grad U and (optionally)
/// the physical Hessian of U at each point, row-major over (i, j).
inline std::vector<FieldPoint> element_fields(const DiscreteSolution& sol, const GeometryMap& geo, ElementId e,
                                              int nx, int ny, bool with_hessian)
{
    const auto& basis = *sol.basis;
    const ElementRule rule(basis, e, nx, ny);
    const ElementBasisTable tab(basis, e, rule.xs, rule.ys);
    std::vector<double> c(tab.size());
    for (std::size_t a = 0; a < tab.size(); ++a)
        c[a] = sol.coefficient(tab.anchors()[a]);

    std::vector<FieldPoint> out;
    out.reserve(rule.xs.size() * rule.ys.size());
    for (std::size_t i = 0; i < rule.xs.size(); ++i)
        for (std::size_t j = 0; j < rule.ys.size(); ++j) {
            FieldPoint fp;
            fp.geo = geometry_at(geo, {rule.xs[i], rule.ys[j]}, with_hessian);
            fp.weight = rule.wx[i] * rule.wy[j] * fp.geo.det_jac;
            Vec2 gt{};
            Mat2 ht{};
            for (std::size_t a = 0; a < tab.size(); ++a) {
                if (c[a] == 0.0)
                    continue;
                fp.u += c[a] * tab.value(a, i, j);
                const Vec2 g = tab.grad(a, i, j);
                gt[0] += c[a] * g[0];
                gt[1] += c[a] * g[1];
                if (with_hessian) {
                    const Mat2 h = tab.hess(a, i, j);
                    for (int r = 0; r < 2; ++r)
                        for (int s = 0; s < 2; ++s)
                            ht[r][s] += c[a] * h[r][s];
                }
            }
            fp.grad = physical_gradient(fp.geo, gt);
            if (with_hessian)
                fp.hess = physical_hessian(fp.geo, ht, fp.grad);
            out.push_back(fp);
        }
    return out;
}

/// |T| = integral of det Dγ over the parameter element.
inline double physical_volume(const GeometryMap& geo, const DyadicBox<2>& box, int n = 8)
{
    const ElementRule rule(box, n, n);
    double v = 0.0;
    for (std::size_t i = 0; i < rule.xs.size(); ++i)
        for (std::size_t j = 0; j < rule.ys.size(); ++j)
            v += rule.wx[i] * rule.wy[j] * det(geo.jacobian({rule.xs[i], rule.ys[j]}));
    return v;
}

namespace detail {

struct LocalSystem {
    std::vector<int> dofs;
    std::vector<double> k;  // row-major dofs x dofs
    std::vector<double> f;
};

inline LocalSystem element_system(const TSplineBasis<2>& basis, const GeometryMap& geo, const PDEData& pde, ElementId e,
                                  const FemOptions& opt)
{
    const auto& dom = basis.domain();
    const ElementRule rule(basis, e, dom.degrees[0] + opt.assembly_extra,
                           dom.degrees[1] + opt.assembly_extra);
    const ElementBasisTable tab(basis, e, rule.xs, rule.ys);

    LocalSystem ls;
    std::vector<std::size_t> local;
    for (std::size_t a = 0; a < tab.size(); ++a) {
        const int k = basis.dof(tab.anchors()[a]);
        if (k >= 0) {
            ls.dofs.push_back(k);
            local.push_back(a);
        }
    }
    const std::size_t n = local.size();
    ls.k.assign(n * n, 0.0);
    ls.f.assign(n, 0.0);
    std::vector<double> v(n);
    std::vector<Vec2> g(n);

    for (std::size_t i = 0; i < rule.xs.size(); ++i)
        for (std::size_t j = 0; j < rule.ys.size(); ++j) {
            const auto q = geometry_at(geo, {rule.xs[i], rule.ys[j]}, false);
            const double w = rule.wx[i] * rule.wy[j] * q.det_jac;
            const Mat2 A = pde.A(q.x);
            const Vec2 b = pde.b(q.x);
            const double c = pde.c(q.x);
            const double f = pde.f(q.x);
            const Vec2 fv = pde.fvec(q.x);
            for (std::size_t r = 0; r < n; ++r) {
                v[r] = tab.value(local[r], i, j);
                g[r] = physical_gradient(q, tab.grad(local[r], i, j));
            }
            for (std::size_t s = 0; s < n; ++s) {
                // Trial function s: flux A grad B_s and convection b . grad B_s.
                const Vec2 ag{A[0][0] * g[s][0] + A[0][1] * g[s][1], A[1][0] * g[s][0] + A[1][1] * g[s][1]};
                const double conv = b[0] * g[s][0] + b[1] * g[s][1];
                for (std::size_t r = 0; r < n; ++r)
                    ls.k[r * n + s] += w * (ag[0] * g[r][0] + ag[1] * g[r][1] + (conv + c * v[s]) * v[r]);
            }
            for (std::size_t r = 0; r < n; ++r)
                ls.f[r] += w * (f * v[r] - fv[0] * g[r][0] - fv[1] * g[r][1]);
        }
    return ls;
}

}  // namespace detail

/// Stiffness matrix K[z,z'] = a(B_z', B_z) and load F[z] = (f, B_z) - (fvec,
/// grad B_z) over the interior anchors. Element systems are computed in
/// parallel and summed in element order, chunk by chunk.
inline SparseSystem assemble(const TSplineBasis<2>& basis, const GeometryMap& geo, const PDEData& pde,
                             const FemOptions& opt = {})
{
    const auto elems = basis.mesh_ref().elements();
    const auto n = static_cast<Eigen::Index>(basis.dof_count());
    SparseSystem sys;
    sys.K.resize(n, n);
    sys.F = Vector::Zero(n);
    constexpr std::size_t chunk = 2048;
    for (std::size_t start = 0; start < elems.size(); start += chunk) {
        const std::size_t count = std::min(chunk, elems.size() - start);
        std::vector<detail::LocalSystem> locals(count);
        parallel_for(count, [&](std::size_t i) { locals[i] = detail::element_system(basis, geo, pde, elems[start + i], opt); });
        std::vector<Eigen::Triplet<double>> trips;
        for (const auto& ls : locals) {
            const std::size_t m = ls.dofs.size();
            for (std::size_t r = 0; r < m; ++r) {
                sys.F[ls.dofs[r]] += ls.f[r];
                for (std::size_t s = 0; s < m; ++s)
                    trips.emplace_back(ls.dofs[r], ls.dofs[s], ls.k[r * m + s]);
            }
        }
        SparseMatrix part(n, n);
        part.setFromTriplets(trips.begin(), trips.end());
        sys.K += part;
    }
    sys.K.makeCompressed();
    return sys;
}

struct SolveReport {
    double relative_residual = 0.0;
    std::string method;
};

/// Direct sparse solve: LDL^T for symmetric systems, LU otherwise, followed
/// by up to three steps of iterative refinement.
inline Vector solve_system(const SparseMatrix& K, const Vector& F, bool symmetric, double tolerance = 1e-10,
                           SolveReport* report = nullptr)
{
    const double fnorm = F.norm();
    if (K.rows() == 0 || fnorm == 0.0) {
        if (report)
            *report = {0.0, "trivial"};
        return Vector::Zero(F.size());
    }
    Vector x;
    double rel = 0.0;
    auto refine = [&](auto& solver, const char* name) {
        x = solver.solve(F);
        rel = (F - K * x).norm() / fnorm;
        for (int it = 0; it < 3 && !(rel <= tolerance); ++it) {
            x += solver.solve(F - K * x);
            rel = (F - K * x).norm() / fnorm;
        }
        if (report)
            *report = {rel, name};
    };
    if (symmetric) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
        if (ldlt.info() != Eigen::Success)
            throw SolverError("solve: LDL^T factorization failed");
        const Vector d = ldlt.vectorD().cwiseAbs();
        if (d.minCoeff() == 0.0)
            throw SolverError("solve: singular matrix (zero pivot)");
        refine(ldlt, "ldlt");
        if (!(rel <= tolerance))
            throw SolverError("solve: relative residual " + std::to_string(rel) +
                              ", pivot ratio estimate " + std::to_string(d.maxCoeff() / d.minCoeff()));
    } else {
        Eigen::SparseLU<SparseMatrix> lu;
        lu.analyzePattern(K);
        lu.factorize(K);
        if (lu.info() != Eigen::Success)
            throw SolverError("solve: LU factorization failed: " + lu.lastErrorMessage());
        refine(lu, "lu");
        if (!(rel <= tolerance))
            throw SolverError("solve: relative residual " + std::to_string(rel));
    }
    return x;
}

/// Galerkin solution on the given basis.
inline DiscreteSolution solve(std::shared_ptr<const TSplineBasis<2>> basis, const GeometryMap& geo,
                              const PDEData& pde, const FemOptions& opt = {}, SolveReport* report = nullptr)
{
    const auto sys = assemble(*basis, geo, pde, opt);
    DiscreteSolution sol;
    sol.coeffs = solve_system(sys.K, sys.F, pde.symmetric, opt.tolerance, report);
    sol.basis = std::move(basis);
    return sol;
}

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
    [[nodiscard]] double h1() const { return std::sqrt(l2 * l2 + h1_semi * h1_semi); }
};

inline ErrorNorms error_norms(const DiscreteSolution& sol, const GeometryMap& geo,
                              const std::function<double(const Vec2&)>& u,
                              const std::function<Vec2(const Vec2&)>& grad_u, const FemOptions& opt = {})
{
    const auto& basis = *sol.basis;
    const auto elems = basis.mesh_ref().elements();
    const auto& dom = basis.domain();
    std::vector<double> l2(elems.size()), semi(elems.size());
    parallel_for(elems.size(), [&](std::size_t k) {
        const auto pts = element_fields(sol, geo, elems[k], dom.degrees[0] + opt.error_extra,
                                        dom.degrees[1] + opt.error_extra, false);
        for (const auto& fp : pts) {
            const double e = u(fp.geo.x) - fp.u;
            const Vec2 g = grad_u(fp.geo.x);
            l2[k] += fp.weight * e * e;
            semi[k] += fp.weight * ((g[0] - fp.grad[0]) * (g[0] - fp.grad[0]) + (g[1] - fp.grad[1]) * (g[1] - fp.grad[1]));
        }
    });
    ErrorNorms out;
    for (std::size_t k = 0; k < elems.size(); ++k) {
        out.l2 += l2[k];
        out.h1_semi += semi[k];
    }
    out.l2 = std::sqrt(out.l2);
    out.h1_semi = std::sqrt(out.h1_semi);
    return out;
}

/// ||u - U||_{H^1} by element quadrature with p_i + 4 points per direction.
inline double h1_error(const DiscreteSolution& sol, const GeometryMap& geo, const std::function<double(const Vec2&)>& u,
                       const std::function<Vec2(const Vec2&)>& grad_u, const FemOptions& opt = {})
{
    return error_norms(sol, geo, u, grad_u, opt).h1();
}

/// Coordinate text format: one "row col value" line per stored entry.
inline void write_coordinate(std::ostream& os, const SparseMatrix& K)
{
    os << K.rows() << ' ' << K.cols() << ' ' << K.nonZeros() << '\n';
    os.precision(17);
    for (Eigen::Index c = 0; c < K.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(K, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace tsafem

#endif  // TSAFEM_FEM_HPP
