#ifndef TSAFEM_BSPLINE_HPP
#define TSAFEM_BSPLINE_HPP

#include <array>
#include <span>
#include <stdexcept>

namespace tsafem {

inline constexpr int max_degree = 15;

/// Value and first two derivatives of one B-spline at a point.
struct BSplineJet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

namespace detail {

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

/// Index j with x[j] <= t < x[j+1]; at the last knot the last non-empty span
/// is taken so that the spline is continuous from inside its support.
inline int knot_span(std::span<const double> x, double t)
{
    const int last = static_cast<int>(x.size()) - 1;
    if (t == x[static_cast<std::size_t>(last)]) {
        for (int j = last - 1; j >= 0; --j)
            if (x[static_cast<std::size_t>(j)] < x[static_cast<std::size_t>(j) + 1])
                return j;
        return -1;
    }
    for (int j = 0; j < last; ++j)
        if (x[static_cast<std::size_t>(j)] <= t && t < x[static_cast<std::size_t>(j) + 1])
            return j;
    return -1;
}

}  // namespace detail

/// The B-spline of degree x.size() - 2 on the knots x_0 <= ... <= x_{p+1},
/// with derivatives up to order two. Cox-de Boor recursion with 0/0 := 0.
inline BSplineJet bspline_jet(std::span<const double> x, double t)
{
    const int p = static_cast<int>(x.size()) - 2;
    if (p < 0 || p > max_degree)
        throw std::invalid_argument("bspline: unsupported knot vector length");
    BSplineJet out;
    if (t < x.front() || t > x.back() || x.front() == x.back())
        return out;
    const int s = detail::knot_span(x, t);
    if (s < 0)
        return out;

    // table[r][j]: degree-r spline on x_j .. x_{j+r+1}
    std::array<std::array<double, max_degree + 2>, max_degree + 1> table;  // NOLINT: filled before use
    for (int j = 0; j <= p; ++j)
        table[0][static_cast<std::size_t>(j)] = j == s ? 1.0 : 0.0;
    for (int r = 1; r <= p; ++r) {
        auto& cur = table[static_cast<std::size_t>(r)];
        const auto& prev = table[static_cast<std::size_t>(r) - 1];
        for (int j = 0; j <= p - r; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const auto ru = static_cast<std::size_t>(r);
            cur[ju] = detail::safe_ratio(t - x[ju], x[ju + ru] - x[ju]) * prev[ju] +
                      detail::safe_ratio(x[ju + ru + 1] - t, x[ju + ru + 1] - x[ju + 1]) * prev[ju + 1];
        }
    }
    out.value = table[static_cast<std::size_t>(p)][0];

    // Derivatives: expand the top spline into combinations of lower degrees.
    std::array<double, max_degree + 2> coef{};
    coef[0] = 1.0;
    for (int m = 1; m <= 2 && m <= p; ++m) {
        const int r = p - m + 1;  // degree being differentiated
        std::array<double, max_degree + 2> next{};
        for (int j = 0; j < m; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const auto ru = static_cast<std::size_t>(r);
            next[ju] += coef[ju] * detail::safe_ratio(r, x[ju + ru] - x[ju]);
            next[ju + 1] -= coef[ju] * detail::safe_ratio(r, x[ju + ru + 1] - x[ju + 1]);
        }
        coef = next;
        double v = 0.0;
        for (int j = 0; j <= m; ++j)
            v += coef[static_cast<std::size_t>(j)] * table[static_cast<std::size_t>(p - m)][static_cast<std::size_t>(j)];
        (m == 1 ? out.d1 : out.d2) = v;
    }
    return out;
}

/// Value (deriv = 0) or derivative (1, 2) of the B-spline.
inline double bspline_1d(std::span<const double> x, double t, int deriv = 0)
{
    if (deriv < 0 || deriv > 2)
        throw std::invalid_argument("bspline_1d: derivative order must be 0, 1 or 2");
    const auto j = bspline_jet(x, t);
    return deriv == 0 ? j.value : deriv == 1 ? j.d1 : j.d2;
}

}  // namespace tsafem

#endif  // TSAFEM_BSPLINE_HPP
