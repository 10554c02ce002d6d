#ifndef TSAFEM_QUADRATURE_HPP
#define TSAFEM_QUADRATURE_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tsafem {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n; cached per n.
inline const GaussRule& gauss_legendre(int n)
{
    if (n < 1 || n > 64)
        throw std::invalid_argument("gauss_legendre: unsupported number of points");
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mtx);
    if (auto it = cache.find(n); it != cache.end())
        return it->second;
    GaussRule r;
    r.points.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        r.points[static_cast<std::size_t>(n - 1 - i)] = x;
        r.weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

/// Gauss points and weights mapped to [a, b].
inline void gauss_on_interval(int n, double a, double b, std::vector<double>& pts, std::vector<double>& wts)
{
    const auto& g = gauss_legendre(n);
    pts.resize(static_cast<std::size_t>(n));
    wts.resize(static_cast<std::size_t>(n));
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        pts[i] = mid + half * g.points[i];
        wts[i] = half * g.weights[i];
    }
}

}  // namespace tsafem

#endif  // TSAFEM_QUADRATURE_HPP
