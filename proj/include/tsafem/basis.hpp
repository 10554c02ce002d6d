#ifndef TSAFEM_BASIS_HPP
#define TSAFEM_BASIS_HPP

#include <algorithm>
#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tsafem/bspline.hpp"
#include "tsafem/extended_mesh.hpp"
#include "tsafem/refinement.hpp"

namespace tsafem {

template <int Dim>
using LocalKnotVectors = std::array<std::vector<Dyadic>, Dim>;

/// Local knot vectors of an active node: the p_i + 2 consecutive skeleton
/// intersections centred at z_i, clamped to [0, N_i].
template <int Dim>
[[nodiscard]] LocalKnotVectors<Dim> local_knot_vectors(const ExtendedMesh<Dim>& ext, const std::type_identity_t<ActiveNode<Dim>>& z)
{
    if (!ext.in_active_region(z))
        throw std::invalid_argument("local_knot_vectors: node outside the active region");
    const auto& dom = ext.domain();
    // Local element size near z sets the initial search window.
    DyadicPoint<Dim> inside = z;
    for (int i = 0; i < Dim; ++i)
        inside[i] = std::clamp(z[i], Dyadic(0), Dyadic(dom.sizes[i]));
    const ElementId host = ext.interior().locate(inside);
    if (host < 0)
        throw std::logic_error("local_knot_vectors: no element contains the projected node");

    LocalKnotVectors<Dim> out;
    for (int i = 0; i < Dim; ++i) {
        const int half = (dom.degrees[i] + 1) / 2;
        Dyadic w = ext.interior().box(host).side(i) * Dyadic(dom.degrees[i] + 1);
        std::vector<Dyadic> line;
        std::ptrdiff_t at = -1;
        while (true) {
            line = ext.skeleton_intersections(z, i, z[i] - w, z[i] + w);
            const auto it = std::lower_bound(line.begin(), line.end(), z[i]);
            if (it == line.end() || *it != z[i])
                throw std::logic_error("local_knot_vectors: node is not on the skeleton");
            at = it - line.begin();
            const bool enough = at >= half && static_cast<std::ptrdiff_t>(line.size()) - 1 - at >= half;
            const bool whole = z[i] - w <= ext.ext_lower(i) && z[i] + w >= ext.ext_upper(i);
            if (enough)
                break;
            if (whole)
                throw std::logic_error("local_knot_vectors: too few skeleton intersections");
            w = w * Dyadic(2);
        }
        auto& k = out[static_cast<std::size_t>(i)];
        for (std::ptrdiff_t j = at - half; j <= at + half; ++j)
            k.push_back(std::clamp(line[static_cast<std::size_t>(j)], Dyadic(0), Dyadic(dom.sizes[i])));
    }
    return out;
}

/// Anchor of one T-spline blending function.
template <int Dim>
struct Anchor {
    ActiveNode<Dim> node{};
    LocalKnotVectors<Dim> knots{};
    /// Node on the boundary of the active region; such functions do not
    /// vanish on the boundary of the parameter domain.
    bool boundary = false;

    [[nodiscard]] DyadicBox<Dim> support() const
    {
        DyadicBox<Dim> b;
        b.level = -1;
        for (int i = 0; i < Dim; ++i) {
            b.lower[i] = knots[static_cast<std::size_t>(i)].front();
            b.upper[i] = knots[static_cast<std::size_t>(i)].back();
        }
        return b;
    }
};

struct BasisOptions {
    /// Reject meshes failing the admissibility check.
    bool require_admissible = true;
};

/// T-spline blending functions of an admissible mesh. The interior anchors
/// (those off the active-region boundary) form a basis of the splines
/// vanishing on the boundary; they are numbered as degrees of freedom.
template <int Dim>
class TSplineBasis {
public:
    TSplineBasis(std::shared_ptr<const TMesh<Dim>> mesh, BasisOptions opts = {}) : ext_(std::move(mesh))
    {
        if (opts.require_admissible) {
            const auto rep = check_admissibility(ext_.interior());
            if (!rep.admissible)
                throw std::invalid_argument("build_basis: mesh is not admissible");
        }
        const auto nodes = ext_.active_nodes();
        anchors_.reserve(nodes.size());
        for (const auto& z : nodes) {
            Anchor<Dim> a;
            a.node = z;
            a.knots = local_knot_vectors(ext_, z);
            a.boundary = ext_.on_active_boundary(z);
            anchors_.push_back(std::move(a));
        }
        dof_.assign(anchors_.size(), -1);
        for (std::size_t a = 0; a < anchors_.size(); ++a) {
            if (!anchors_[a].boundary) {
                dof_[a] = static_cast<int>(interior_.size());
                interior_.push_back(static_cast<int>(a));
            }
        }
        // Flattened floating point knots for evaluation.
        offsets_[0] = 0;
        for (int i = 0; i < Dim; ++i)
            offsets_[static_cast<std::size_t>(i) + 1] =
                offsets_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(domain().degrees[i] + 2);
        knots_.resize(anchors_.size() * offsets_[Dim]);
        for (std::size_t a = 0; a < anchors_.size(); ++a)
            for (int i = 0; i < Dim; ++i)
                for (std::size_t j = 0; j < anchors_[a].knots[static_cast<std::size_t>(i)].size(); ++j)
                    knots_[a * offsets_[Dim] + offsets_[static_cast<std::size_t>(i)] + j] =
                        anchors_[a].knots[static_cast<std::size_t>(i)][j].to_double();
        // Per-element lists of anchors whose support overlaps the element.
        const auto& m = mesh_ref();
        support_.assign(m.node_count(), {});
        for (std::size_t a = 0; a < anchors_.size(); ++a) {
            const auto s = anchors_[a].support();
            bool degenerate = false;
            for (int i = 0; i < Dim; ++i)
                degenerate = degenerate || s.lower[i] == s.upper[i];
            if (degenerate)
                continue;
            for (ElementId e : m.overlapping(s))
                support_[static_cast<std::size_t>(e)].push_back(static_cast<int>(a));
        }
    }

    [[nodiscard]] const TMesh<Dim>& mesh_ref() const { return ext_.interior(); }
    [[nodiscard]] std::shared_ptr<const TMesh<Dim>> mesh() const { return ext_.interior_ptr(); }
    [[nodiscard]] const ExtendedMesh<Dim>& extended() const { return ext_; }
    [[nodiscard]] const ParamDomain<Dim>& domain() const { return ext_.domain(); }

    [[nodiscard]] std::size_t size() const { return anchors_.size(); }
    [[nodiscard]] const std::vector<Anchor<Dim>>& anchors() const { return anchors_; }
    [[nodiscard]] const Anchor<Dim>& anchor(int a) const { return anchors_[static_cast<std::size_t>(a)]; }

    /// Anchor indices of the interior functions, in dof order.
    [[nodiscard]] const std::vector<int>& interior() const { return interior_; }
    [[nodiscard]] std::size_t dof_count() const { return interior_.size(); }
    /// Dof number of an anchor, or -1 for boundary anchors.
    [[nodiscard]] int dof(int a) const { return dof_[static_cast<std::size_t>(a)]; }

    /// Knots of anchor a in direction i as doubles.
    [[nodiscard]] std::span<const double> knots(int a, int i) const
    {
        const auto base = static_cast<std::size_t>(a) * offsets_[Dim] + offsets_[static_cast<std::size_t>(i)];
        return {knots_.data() + base, static_cast<std::size_t>(domain().degrees[i] + 2)};
    }

    /// Anchors whose support overlaps element e with positive measure.
    [[nodiscard]] const std::vector<int>& supported_on(ElementId e) const { return support_[static_cast<std::size_t>(e)]; }

    /// Largest number of anchors supported on a single element.
    [[nodiscard]] std::size_t max_support_count() const
    {
        std::size_t m = 0;
        for (ElementId e : mesh_ref().elements())
            m = std::max(m, support_[static_cast<std::size_t>(e)].size());
        return m;
    }

private:
    ExtendedMesh<Dim> ext_;
    std::vector<Anchor<Dim>> anchors_;
    std::vector<int> dof_;
    std::vector<int> interior_;
    std::array<std::size_t, Dim + 1> offsets_{};
    std::vector<double> knots_;
    std::vector<std::vector<int>> support_;
};

template <int Dim>
[[nodiscard]] TSplineBasis<Dim> build_basis(std::shared_ptr<const TMesh<Dim>> mesh, BasisOptions opts = {})
{
    return TSplineBasis<Dim>(std::move(mesh), opts);
}

template <int Dim>
[[nodiscard]] TSplineBasis<Dim> build_basis(const TMesh<Dim>& mesh, BasisOptions opts = {})
{
    return TSplineBasis<Dim>(std::make_shared<const TMesh<Dim>>(mesh), opts);
}

/// Value, gradient and Hessian of one blending function at a point.
template <int Dim>
struct BasisValue {
    int anchor = -1;
    double value = 0.0;
    std::array<double, Dim> grad{};
    std::array<std::array<double, Dim>, Dim> hess{};
};

/// Tensor-product value and derivatives of anchor a at parameter point t.
template <int Dim>
[[nodiscard]] BasisValue<Dim> eval_anchor(const TSplineBasis<Dim>& basis, int a, const std::type_identity_t<std::array<double, Dim>>& t)
{
    std::array<BSplineJet, Dim> jet;
    for (int i = 0; i < Dim; ++i)
        jet[static_cast<std::size_t>(i)] = bspline_jet(basis.knots(a, i), t[static_cast<std::size_t>(i)]);
    BasisValue<Dim> v;
    v.anchor = a;
    v.value = 1.0;
    for (const auto& j : jet)
        v.value *= j.value;
    for (int i = 0; i < Dim; ++i) {
        for (int k = 0; k < Dim; ++k) {
            double g = 1.0, h = 1.0;
            for (int l = 0; l < Dim; ++l) {
                const auto& j = jet[static_cast<std::size_t>(l)];
                g *= l == i ? j.d1 : j.value;
                if (i == k)
                    h *= l == i ? j.d2 : j.value;
                else
                    h *= (l == i || l == k) ? j.d1 : j.value;
            }
            if (k == 0)
                v.grad[static_cast<std::size_t>(i)] = g;
            v.hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = h;
        }
    }
    return v;
}

/// All blending functions not vanishing at t, with first and second
/// derivatives.
template <int Dim>
[[nodiscard]] std::vector<BasisValue<Dim>> eval_basis(const TSplineBasis<Dim>& basis, const std::type_identity_t<std::array<double, Dim>>& t)
{
    const ElementId e = basis.mesh_ref().locate(t);
    if (e < 0)
        throw std::invalid_argument("eval_basis: point outside the parameter domain");
    std::vector<BasisValue<Dim>> out;
    for (int a : basis.supported_on(e)) {
        auto v = eval_anchor(basis, a, t);
        bool zero = v.value == 0.0;
        for (double g : v.grad)
            zero = zero && g == 0.0;
        if (!zero)
            out.push_back(v);
    }
    return out;
}

namespace detail {

/// True when a and b are both consecutive sub-vectors of one sorted vector.
inline bool aligned(const std::vector<Dyadic>& a, const std::vector<Dyadic>& b)
{
    auto one_way = [](const std::vector<Dyadic>& x, const std::vector<Dyadic>& y) {
        const std::size_t n = x.size();
        for (std::size_t shift = 0; shift <= n; ++shift) {
            bool ok = true;
            for (std::size_t j = 0; j + shift < n && j < y.size() && ok; ++j)
                ok = x[j + shift] == y[j];
            if (ok && (shift < n || x.back() <= y.front()))
                return true;
        }
        return false;
    };
    return one_way(a, b) || one_way(b, a);
}

}  // namespace detail

struct DualCompatibilityReport {
    bool compatible = true;
    std::size_t pairs_checked = 0;
    std::vector<std::pair<int, int>> violations;
};

/// Checks that every pair of functions with overlapping supports has local
/// knot vectors aligned in at least one direction.
template <int Dim>
[[nodiscard]] DualCompatibilityReport dual_compatibility_report(const TSplineBasis<Dim>& basis)
{
    std::vector<std::pair<int, int>> pairs;
    for (ElementId e : basis.mesh_ref().elements()) {
        const auto& s = basis.supported_on(e);
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j)
                pairs.emplace_back(std::min(s[i], s[j]), std::max(s[i], s[j]));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    DualCompatibilityReport rep;
    for (auto [a, b] : pairs) {
        const auto& A = basis.anchor(a);
        const auto& B = basis.anchor(b);
        if (!A.support().overlaps(B.support()))
            continue;
        ++rep.pairs_checked;
        bool ok = false;
        for (int i = 0; i < Dim && !ok; ++i)
            ok = detail::aligned(A.knots[static_cast<std::size_t>(i)], B.knots[static_cast<std::size_t>(i)]);
        if (!ok)
            rep.violations.emplace_back(a, b);
    }
    rep.compatible = rep.violations.empty();
    return rep;
}

}  // namespace tsafem

#endif  // TSAFEM_BASIS_HPP
