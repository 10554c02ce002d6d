#ifndef TSAFEM_ADAPTIVE_HPP
#define TSAFEM_ADAPTIVE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tsafem/estimator.hpp"
#include "tsafem/refinement.hpp"

namespace tsafem {

struct MarkingParams {
    double theta = 0.5;
    /// Dörfler constant C_min; only exact minimality (1) is implemented.
    int cmin = 1;

    void validate() const
    {
        if (!(theta > 0.0 && theta <= 1.0))
            throw std::invalid_argument("marking: theta must lie in (0, 1]");
        if (cmin != 1)
            throw std::invalid_argument("marking: only C_min = 1 is supported");
    }
};

/// Positions (into eta2) of a set of minimal cardinality with
/// sum >= theta * total. Largest values first, ties by position. theta = 1
/// selects every positive entry, even ones lost to rounding in the sum.
inline std::vector<std::size_t> mark_positions(const std::vector<double>& eta2, const MarkingParams& params)
{
    params.validate();
    std::vector<std::size_t> order(eta2.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eta2[a] > eta2[b]; });
    double total = 0.0;
    for (std::size_t k : order)
        total += eta2[k];
    std::vector<std::size_t> out;
    if (!(total > 0.0))
        return out;
    const double goal = params.theta * total;
    double sum = 0.0;
    const bool all = params.theta == 1.0;
    for (std::size_t k : order) {
        if ((!all && sum >= goal) || !(eta2[k] > 0.0))
            break;
        sum += eta2[k];
        out.push_back(k);
    }
    return out;
}

/// Dörfler marking on an indicator field; returns element ids in ascending order.
inline std::vector<ElementId> mark(const IndicatorField& ind, const MarkingParams& params)
{
    std::vector<ElementId> out;
    for (std::size_t k : mark_positions(ind.squared(), params))
        out.push_back(ind.ids[k]);
    std::sort(out.begin(), out.end());
    return out;
}

/// One pass of solve, estimate and mark.
struct AdaptiveState {
    int iteration = 0;
    std::shared_ptr<const TMesh<2>> mesh;
    std::size_t elements = 0;
    std::size_t dofs = 0;
    double eta = 0.0;
    double eta_volume = 0.0;
    double eta_jump = 0.0;
    double osc = 0.0;
    /// NaN when the exact solution is unknown.
    double h1_error = std::numeric_limits<double>::quiet_NaN();
    std::vector<ElementId> marked;
    /// Sum of squared indicators over the marked set.
    double marked_eta2 = 0.0;
    double seconds = 0.0;
};

struct AdaptiveParams {
    MarkingParams marking;
    /// Refine every element instead of marking.
    bool uniform = false;
    std::size_t max_elements = 20000;
    int max_iterations = 200;
    double eta_tolerance = 0.0;
    FemOptions fem;
    EstimatorOptions estimator;
};

struct AdaptiveObserver {
    std::function<void(const AdaptiveState&, const DiscreteSolution&, const IndicatorField&, const OscillationField&)>
        on_iteration;
};

/// The adaptive loop: solve, estimate, mark, refine until the mesh reaches
/// max_elements, eta drops below eta_tolerance or max_iterations passes are
/// done. The last state carries no marks. A solver failure propagates after
/// `states` has received the completed passes.
inline std::vector<AdaptiveState> run_adaptive(std::shared_ptr<const TMesh<2>> initial, const GeometryMap& geo,
                                               const PDEData& pde, const AdaptiveParams& params,
                                               const AdaptiveObserver& obs = {},
                                               std::vector<AdaptiveState>* partial = nullptr)
{
    params.marking.validate();
    std::vector<AdaptiveState> local;
    auto& states = partial ? *partial : local;
    states.clear();
    auto mesh = std::move(initial);
    for (int it = 0;; ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        AdaptiveState st;
        st.iteration = it;
        st.mesh = mesh;
        st.elements = mesh->size();
        auto basis = std::make_shared<const TSplineBasis<2>>(mesh);
        st.dofs = basis->dof_count();
        const auto sol = solve(basis, geo, pde, params.fem);
        const auto [ind, osc] = estimate_with_oscillations(sol, pde, geo, params.estimator);
        st.eta = ind.eta();
        st.eta_volume = std::sqrt(ind.volume_total());
        st.eta_jump = std::sqrt(ind.jump_total());
        st.osc = osc.osc();
        if (pde.has_exact())
            st.h1_error = h1_error(sol, geo, pde.u, pde.grad_u, params.fem);

        const bool last = st.elements >= params.max_elements || st.eta <= params.eta_tolerance ||
                          it + 1 >= params.max_iterations || !(st.eta > 0.0);
        if (!last) {
            const auto positions = mark_positions(ind.squared(), params.uniform ? MarkingParams{1.0, 1} : params.marking);
            for (std::size_t k : positions)
                st.marked_eta2 += ind.local(k);
            if (params.uniform) {
                st.marked.assign(ind.ids.begin(), ind.ids.end());
            } else {
                for (std::size_t k : positions)
                    st.marked.push_back(ind.ids[k]);
                std::sort(st.marked.begin(), st.marked.end());
            }
        }
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (obs.on_iteration)
            obs.on_iteration(st, sol, ind, osc);
        states.push_back(st);
        if (last)
            break;
        mesh = std::make_shared<const TMesh<2>>(refine(*mesh, st.marked));
    }
    return partial ? states : local;
}

/// Least-squares line y = slope x + intercept with its root-mean-square residual.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        r2 += r * r;
    }
    f.rms_residual = std::sqrt(r2 / n);
    return f;
}

/// Slope of log(value) against log(count).
inline LineFit fit_rate(const std::vector<double>& counts, const std::vector<double>& values)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        lx.push_back(std::log(counts[i]));
        ly.push_back(std::log(values[i]));
    }
    return fit_line(lx, ly);
}

struct RateWindow {
    std::size_t first = 0;
    std::size_t last = 0;
    LineFit eta;
    LineFit h1;
    LineFit total;
    bool has_error = false;
};

/// Windowed slopes of log eta, log H1 error and log(error + osc) against
/// log(#T - #T_0 + 1). The last window is the reported rate.
struct RateTable {
    std::vector<RateWindow> windows;
    [[nodiscard]] const RateWindow& final_window() const { return windows.back(); }
};

inline RateTable rate_table(const std::vector<AdaptiveState>& states, std::size_t window = 5)
{
    if (states.size() < 4)
        throw std::invalid_argument("rate_table: need at least four states");
    window = std::clamp<std::size_t>(window, 2, states.size());
    const double n0 = static_cast<double>(states.front().elements);
    RateTable tab;
    for (std::size_t first = 0; first + window <= states.size(); ++first) {
        RateWindow w;
        w.first = first;
        w.last = first + window - 1;
        std::vector<double> x, eta, h1, total;
        w.has_error = true;
        for (std::size_t k = first; k <= w.last; ++k) {
            x.push_back(static_cast<double>(states[k].elements) - n0 + 1.0);
            eta.push_back(states[k].eta);
            h1.push_back(states[k].h1_error);
            total.push_back(states[k].h1_error + states[k].osc);
            w.has_error = w.has_error && std::isfinite(states[k].h1_error) && states[k].h1_error > 0.0;
        }
        w.eta = fit_rate(x, eta);
        if (w.has_error) {
            w.h1 = fit_rate(x, h1);
            w.total = fit_rate(x, total);
        }
        tab.windows.push_back(w);
    }
    return tab;
}

}  // namespace tsafem

#endif  // TSAFEM_ADAPTIVE_HPP
