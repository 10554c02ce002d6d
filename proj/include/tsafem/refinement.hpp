#ifndef TSAFEM_REFINEMENT_HPP
#define TSAFEM_REFINEMENT_HPP

#include <algorithm>
#include <array>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tsafem/mesh.hpp"

namespace tsafem {

/// Half-widths D(k) of the open box around an element midpoint that defines
/// its neighborhood. All components are dyadic.
template <int Dim>
[[nodiscard]] std::array<Dyadic, Dim> radius(const ParamDomain<Dim>& domain, int k)
{
    if (k < 0)
        throw std::invalid_argument("radius: negative level");
    const auto& p = domain.degrees;
    std::array<Dyadic, Dim> r{};
    if constexpr (Dim == 2) {
        if (k % 2 == 0) {
            r = {Dyadic(p[0], 1), Dyadic(p[1], 1) + 1};
            for (auto& v : r)
                v = v.halved(k / 2);
        } else {
            r = {Dyadic(p[0], 2) + Dyadic(1, 1), Dyadic(p[1], 1)};
            for (auto& v : r)
                v = v.halved((k - 1) / 2);
        }
    } else {
        const Dyadic full_step = Dyadic(3, 1);   // 3/2
        const Dyadic half_step = Dyadic(3, 2);   // 3/4
        switch (k % 3) {
        case 0:
            r = {Dyadic(p[0]) + full_step, Dyadic(p[1]) + full_step, Dyadic(p[2]) + full_step};
            break;
        case 1:
            r = {Dyadic(p[0], 1) + half_step, Dyadic(p[1]) + full_step, Dyadic(p[2]) + full_step};
            break;
        default:
            r = {Dyadic(p[0], 1) + half_step, Dyadic(p[1], 1) + half_step, Dyadic(p[2]) + full_step};
            break;
        }
        for (auto& v : r)
            v = v.halved(k / 3);
    }
    return r;
}

/// Elements meeting the open box mid(t) +- D(level(t)), sorted by id.
template <int Dim>
[[nodiscard]] std::vector<ElementId> neighbors(const TMesh<Dim>& mesh, ElementId t)
{
    if (!mesh.is_element(t))
        throw std::invalid_argument("neighbors: element " + std::to_string(t) + " is not in the mesh");
    const auto& b = mesh.box(t);
    const auto D = radius(mesh.domain(), b.level);
    DyadicPoint<Dim> lo, hi;
    for (int i = 0; i < Dim; ++i) {
        const Dyadic m = b.mid(i);
        lo[i] = m - D[i];
        hi[i] = m + D[i];
    }
    std::vector<ElementId> out;
    mesh.for_each_leaf(
        lo, hi,
        [&](const DyadicBox<Dim>& c) {
            for (int i = 0; i < Dim; ++i)
                if (!(c.lower[i] < hi[i] && c.upper[i] > lo[i]))
                    return false;
            return true;
        },
        [&](ElementId id) { out.push_back(id); });
    std::sort(out.begin(), out.end());
    return out;
}

/// Elements whose midpoints differ from mid(t) by at most D(level(t)) in each
/// direction; coincides with `neighbors` on admissible two-dimensional meshes.
template <int Dim>
[[nodiscard]] std::vector<ElementId> neighbors_by_midpoint(const TMesh<Dim>& mesh, ElementId t)
{
    if (!mesh.is_element(t))
        throw std::invalid_argument("neighbors_by_midpoint: element is not in the mesh");
    const auto& b = mesh.box(t);
    const auto D = radius(mesh.domain(), b.level);
    DyadicBox<Dim> q;
    for (int i = 0; i < Dim; ++i) {
        q.lower[i] = b.mid(i) - D[i];
        q.upper[i] = b.mid(i) + D[i];
    }
    std::vector<ElementId> out;
    for (ElementId id : mesh.touching(q)) {
        const auto& c = mesh.box(id);
        bool ok = true;
        for (int i = 0; i < Dim && ok; ++i)
            ok = (c.mid(i) - b.mid(i)).abs() <= D[i];
        if (ok)
            out.push_back(id);
    }
    return out;
}

/// Neighbors of strictly smaller level.
template <int Dim>
[[nodiscard]] std::vector<ElementId> bad_neighbors(const TMesh<Dim>& mesh, ElementId t)
{
    auto n = neighbors(mesh, t);
    const int k = mesh.level(t);
    std::erase_if(n, [&](ElementId id) { return mesh.level(id) >= k; });
    return n;
}

/// Marked set extended by bad neighbors until closed; sorted by id.
template <int Dim>
[[nodiscard]] std::vector<ElementId> closure(const TMesh<Dim>& mesh, const std::vector<ElementId>& marks)
{
    std::vector<char> marked(mesh.node_count(), 0);
    std::deque<ElementId> work;
    for (ElementId id : marks) {
        if (!mesh.is_element(id))
            throw std::invalid_argument("refine: marked element " + std::to_string(id) + " is not in the mesh");
        if (!marked[static_cast<std::size_t>(id)]) {
            marked[static_cast<std::size_t>(id)] = 1;
            work.push_back(id);
        }
    }
    while (!work.empty()) {
        const ElementId t = work.front();
        work.pop_front();
        for (ElementId n : bad_neighbors(mesh, t)) {
            if (!marked[static_cast<std::size_t>(n)]) {
                marked[static_cast<std::size_t>(n)] = 1;
                work.push_back(n);
            }
        }
    }
    std::vector<ElementId> out;
    for (ElementId id : mesh.elements())
        if (marked[static_cast<std::size_t>(id)])
            out.push_back(id);
    return out;
}

/// Refinement with closure: marks plus all recursively required bad
/// neighbors are bisected once each.
template <int Dim>
[[nodiscard]] TMesh<Dim> refine(const TMesh<Dim>& mesh, const std::vector<ElementId>& marks)
{
    if (marks.empty())
        return mesh.fresh_snapshot();
    return mesh.bisected(closure(mesh, marks));
}

/// Coarsest common refinement of two meshes of the same domain. Leaves of the
/// result receive ids 0..n-1 in traversal order.
template <int Dim>
[[nodiscard]] TMesh<Dim> overlay(const TMesh<Dim>& a, const TMesh<Dim>& b)
{
    if (a.domain() != b.domain())
        throw std::invalid_argument("overlay: meshes live on different domains");
    std::vector<std::pair<ElementId, DyadicBox<Dim>>> leaves;
    // Both bisection trees are canonical, so equal positions hold equal boxes.
    struct Frame {
        ElementId na, nb;
    };
    std::vector<Frame> stack;
    for (std::size_t r = 0; r < a.roots().size(); ++r) {
        stack.push_back({a.roots()[r], b.roots()[r]});
        while (!stack.empty()) {
            const auto [na, nb] = stack.back();
            stack.pop_back();
            const bool a_split = na >= 0 && !a.node(na).is_leaf();
            const bool b_split = nb >= 0 && !b.node(nb).is_leaf();
            if (!a_split && !b_split) {
                const auto& box = na >= 0 ? a.node(na).box : b.node(nb).box;
                leaves.emplace_back(static_cast<ElementId>(leaves.size()), box);
                continue;
            }
            for (int c = 1; c >= 0; --c) {
                const ElementId ca = a_split ? a.node(na).children[static_cast<std::size_t>(c)] : -1;
                const ElementId cb = b_split ? b.node(nb).children[static_cast<std::size_t>(c)] : -1;
                stack.push_back({ca, cb});
            }
        }
    }
    return TMesh<Dim>::from_elements(a.domain(), leaves);
}

/// Outcome of checking the gradedness conditions of admissible meshes.
struct AdmissibilityReport {
    bool admissible = true;
    /// Pairs (t, n) with n a neighbor of t and level(n) < level(t) - 1.
    std::vector<std::pair<ElementId, ElementId>> level_jumps;
    /// Touching pairs where the second is not a neighbor of the first.
    std::vector<std::pair<ElementId, ElementId>> missing_neighbors;
    /// Pairs (t, n) with n a neighbor of t and level(n) > level(t) + 1. Meshes
    /// produced by refine can contain these, so they do not affect
    /// `admissible`.
    std::vector<std::pair<ElementId, ElementId>> fine_neighbors;
};

template <int Dim>
[[nodiscard]] AdmissibilityReport check_admissibility(const TMesh<Dim>& mesh)
{
    AdmissibilityReport rep;
    for (ElementId t : mesh.elements()) {
        const auto nb = neighbors(mesh, t);
        const int k = mesh.level(t);
        for (ElementId n : nb) {
            if (mesh.level(n) < k - 1)
                rep.level_jumps.emplace_back(t, n);
            else if (mesh.level(n) > k + 1)
                rep.fine_neighbors.emplace_back(t, n);
        }
        for (ElementId n : mesh.touching(mesh.box(t)))
            if (!std::binary_search(nb.begin(), nb.end(), n))
                rep.missing_neighbors.emplace_back(t, n);
    }
    rep.admissible = rep.level_jumps.empty() && rep.missing_neighbors.empty();
    return rep;
}

}  // namespace tsafem

#endif  // TSAFEM_REFINEMENT_HPP
