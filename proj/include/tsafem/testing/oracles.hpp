#ifndef TSAFEM_TESTING_ORACLES_HPP
#define TSAFEM_TESTING_ORACLES_HPP

// Slow reference implementations used only to check the library.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "tsafem/basis.hpp"
#include "tsafem/extended_mesh.hpp"
#include "tsafem/mesh.hpp"
#include "tsafem/refinement.hpp"

namespace tsafem::oracle {

/// D(k) written out from the case table with plain rationals.
template <int Dim>
std::array<Dyadic, Dim> neighbor_radius(const ParamDomain<Dim>& dom, int k)
{
    std::array<Dyadic, Dim> r{};
    const auto& p = dom.degrees;
    if constexpr (Dim == 2) {
        const int m = k % 2 == 0 ? k / 2 : (k - 1) / 2;
        const Dyadic scale = Dyadic(1).halved(m);
        if (k % 2 == 0) {
            r[0] = Dyadic(p[0], 1) * scale;
            r[1] = (Dyadic(p[1], 1) + Dyadic(1)) * scale;
        } else {
            r[0] = (Dyadic(p[0], 2) + Dyadic(1, 1)) * scale;
            r[1] = Dyadic(p[1], 1) * scale;
        }
    } else {
        const Dyadic scale = Dyadic(1).halved(k / 3);
        for (int i = 0; i < 3; ++i) {
            const bool halved = i < k % 3;
            r[i] = (halved ? Dyadic(p[i], 1) + Dyadic(3, 2) : Dyadic(p[i]) + Dyadic(3, 1)) * scale;
        }
    }
    return r;
}

/// Neighbors by a full scan of all elements.
template <int Dim>
std::vector<ElementId> naive_neighbors(const TMesh<Dim>& mesh, ElementId t)
{
    const auto& b = mesh.box(t);
    const auto D = neighbor_radius(mesh.domain(), b.level);
    std::vector<ElementId> out;
    for (ElementId id : mesh.elements()) {
        const auto& c = mesh.box(id);
        bool hit = true;
        for (int i = 0; i < Dim; ++i) {
            const Dyadic lo = b.mid(i) - D[i], hi = b.mid(i) + D[i];
            hit = hit && c.lower[i] < hi && c.upper[i] > lo;
        }
        if (hit)
            out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Closure by repeated full scans until nothing changes.
template <int Dim>
std::vector<ElementId> naive_closure(const TMesh<Dim>& mesh, const std::vector<ElementId>& marks)
{
    std::set<ElementId> m(marks.begin(), marks.end());
    for (bool changed = true; changed;) {
        changed = false;
        for (ElementId t : std::vector<ElementId>(m.begin(), m.end()))
            for (ElementId n : naive_neighbors(mesh, t))
                if (mesh.level(n) < mesh.level(t) && m.insert(n).second)
                    changed = true;
    }
    return {m.begin(), m.end()};
}

template <int Dim>
TMesh<Dim> naive_refine(const TMesh<Dim>& mesh, const std::vector<ElementId>& marks)
{
    return mesh.bisected(naive_closure(mesh, marks));
}

/// Coarsest common refinement as the minimal boxes of the union of both
/// element sets.
template <int Dim>
std::vector<DyadicBox<Dim>> overlay_boxes(const TMesh<Dim>& a, const TMesh<Dim>& b)
{
    std::vector<DyadicBox<Dim>> all = a.sorted_boxes();
    const auto bb = b.sorted_boxes();
    all.insert(all.end(), bb.begin(), bb.end());
    std::vector<DyadicBox<Dim>> out;
    for (const auto& x : all) {
        bool minimal = true;
        for (const auto& y : all)
            if (x != y && x.contains(y)) {
                minimal = false;
                break;
            }
        if (minimal)
            out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Local knot vector of node z in direction i: all closed-facet crossings of
/// the line through z, found by scanning every interior and frame cell, then
/// the p_i + 2 entries centered at z_i, clamped to [0, N_i].
template <int Dim>
std::vector<Dyadic> local_knots(const ExtendedMesh<Dim>& ext, const std::type_identity_t<DyadicPoint<Dim>>& z, int i)
{
    std::vector<DyadicBox<Dim>> cells = ext.interior().sorted_boxes();
    cells.insert(cells.end(), ext.frame_cells().begin(), ext.frame_cells().end());
    std::set<Dyadic> cuts;
    for (const auto& c : cells) {
        bool on_line = true;
        for (int j = 0; j < Dim; ++j)
            if (j != i)
                on_line = on_line && c.lower[j] <= z[j] && z[j] <= c.upper[j];
        if (on_line) {
            cuts.insert(c.lower[i]);
            cuts.insert(c.upper[i]);
        }
    }
    const std::vector<Dyadic> line(cuts.begin(), cuts.end());
    const auto it = std::find(line.begin(), line.end(), z[i]);
    if (it == line.end())
        throw std::logic_error("oracle: node is not on the skeleton");
    const int p = ext.domain().degrees[i];
    const auto mid = it - line.begin();
    const auto half = (p + 1) / 2;
    if (mid < half || mid + half >= static_cast<std::ptrdiff_t>(line.size()))
        throw std::logic_error("oracle: too few skeleton crossings");
    std::vector<Dyadic> out;
    for (auto k = mid - half; k <= mid + half; ++k)
        out.push_back(std::clamp(line[static_cast<std::size_t>(k)], Dyadic(0), Dyadic(ext.domain().sizes[i])));
    return out;
}

/// B-spline by its divided-difference definition,
/// (x_{p+1} - x_0) [x_0, ..., x_{p+1}] (max(. - t, 0))^p, with derivatives in t
/// up to order 2. Repeated knots use derivatives of the truncated power; the
/// truncated power is 0 wherever its argument is not positive.
inline double divided_difference_bspline(const std::vector<double>& x, double t, int deriv = 0)
{
    const int p = static_cast<int>(x.size()) - 2;
    if (p < 0 || deriv < 0 || deriv > 2 || deriv > p)
        throw std::invalid_argument("divided_difference_bspline: bad arguments");
    auto falling = [](int n, int k) {
        double r = 1.0;
        for (int j = 0; j < k; ++j)
            r *= n - j;
        return r;
    };
    // j-th x-derivative of g(x) = (-1)^deriv p!/(p-deriv)! max(x - t, 0)^(p - deriv).
    auto g = [&](double xv, int j) {
        const int e = p - deriv;
        if (j > e || !(xv > t))
            return 0.0;
        const double s = (deriv % 2 ? -1.0 : 1.0) * falling(p, deriv);
        return s * falling(e, j) * std::pow(xv - t, e - j);
    };
    std::function<double(int, int)> dd = [&](int a, int b) -> double {
        if (x[static_cast<std::size_t>(a)] == x[static_cast<std::size_t>(b)]) {
            double fact = 1.0;
            for (int k = 2; k <= b - a; ++k)
                fact *= k;
            return g(x[static_cast<std::size_t>(a)], b - a) / fact;
        }
        return (dd(a + 1, b) - dd(a, b - 1)) / (x[static_cast<std::size_t>(b)] - x[static_cast<std::size_t>(a)]);
    };
    return (x.back() - x.front()) * dd(0, p + 1);
}

/// Smallest number of entries whose sum reaches theta times the total, by
/// visiting every subset in Gray-code order. Exact for integer-valued
/// entries and dyadic theta.
inline std::size_t minimal_dorfler_cardinality(const std::vector<double>& eta2, double theta)
{
    const std::size_t n = eta2.size();
    if (n > 24)
        throw std::invalid_argument("minimal_dorfler_cardinality: too many entries");
    double total = 0.0;
    for (double v : eta2)
        total += v;
    const double goal = theta * total;
    if (!(total > 0.0))
        return 0;
    std::size_t best = n;
    double sum = 0.0;
    std::uint32_t prev = 0;
    for (std::uint32_t k = 1; k < (1u << n); ++k) {
        const std::uint32_t gray = k ^ (k >> 1);
        const std::uint32_t flip = gray ^ prev;
        const int bit = std::countr_zero(flip);
        sum += (gray & flip) ? eta2[static_cast<std::size_t>(bit)] : -eta2[static_cast<std::size_t>(bit)];
        prev = gray;
        const auto card = static_cast<std::size_t>(std::popcount(gray));
        if (card < best && sum >= goal)
            best = card;
    }
    return best;
}

/// Each element marked independently with the given probability; never empty.
template <int Dim>
std::vector<ElementId> random_marks(const TMesh<Dim>& mesh, std::mt19937_64& rng, double probability)
{
    std::bernoulli_distribution coin(probability);
    std::vector<ElementId> out;
    for (ElementId id : mesh.elements())
        if (coin(rng))
            out.push_back(id);
    if (out.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, mesh.size() - 1);
        out.push_back(mesh.elements()[pick(rng)]);
    }
    return out;
}

/// Mesh after `steps` rounds of random marking and refinement.
template <int Dim>
TMesh<Dim> random_refined_mesh(const ParamDomain<Dim>& dom, int steps, std::mt19937_64& rng, double probability = 0.2)
{
    TMesh<Dim> mesh(dom);
    for (int s = 0; s < steps; ++s)
        mesh = tsafem::refine(mesh, random_marks(mesh, rng, probability));
    return mesh;
}

/// Largest least-squares residual of fitting each coarse blending function
/// by fine ones at sample points; zero up to rounding when the spaces nest.
inline double nestedness_residual(const TSplineBasis<2>& coarse, const TSplineBasis<2>& fine, int per_cell = 4)
{
    std::vector<std::array<double, 2>> pts;
    const auto& mesh = fine.mesh_ref();
    for (ElementId e : mesh.elements()) {
        const auto& b = mesh.box(e);
        for (int i = 0; i < per_cell; ++i)
            for (int j = 0; j < per_cell; ++j)
                pts.push_back({b.lower[0].to_double() + (i + 0.5) / per_cell * b.side(0).to_double(),
                               b.lower[1].to_double() + (j + 0.5) / per_cell * b.side(1).to_double()});
    }
    const auto m = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(fine.size()));
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(coarse.size()));
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& t = pts[static_cast<std::size_t>(r)];
        for (const auto& v : eval_basis(fine, t))
            F(r, v.anchor) = v.value;
        for (const auto& v : eval_basis(coarse, t))
            C(r, v.anchor) = v.value;
    }
    const Eigen::MatrixXd X = F.colPivHouseholderQr().solve(C);
    return (F * X - C).cwiseAbs().maxCoeff();
}

}  // namespace tsafem::oracle

#endif  // TSAFEM_TESTING_ORACLES_HPP
