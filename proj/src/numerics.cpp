#include "fts/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fts/error.hpp"

namespace fts {

namespace {

double spread_x(const std::vector<std::vector<double>>& verts, const std::vector<int>& order) {
    const std::vector<double>& best = verts[order[0]];
    double worst = 0.0;
    for (std::size_t k = 1; k < verts.size(); ++k) {
        const std::vector<double>& v = verts[order[k]];
        for (std::size_t i = 0; i < best.size(); ++i)
            worst = std::max(worst, std::abs(v[i] - best[i]));
    }
    return worst;
}

}  // namespace

OptimResult minimize_simplex(const Objective& objective, std::span<const double> x0,
                             const SimplexOptions& options) {
    if (x0.empty()) fail(errc::invalid_argument, "minimize_simplex: empty start point");
    if (options.max_iter <= 0) fail(errc::invalid_argument, "minimize_simplex: max_iter must be positive");

    const std::size_t n = x0.size();
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<std::vector<double>> verts(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < n; ++i)
        verts[i + 1][i] += std::max(0.05 * std::abs(x0[i]), 0.00025);

    std::vector<double> fvals(n + 1);
    for (std::size_t k = 0; k <= n; ++k) fvals[k] = objective(verts[k]);
    if (!std::isfinite(fvals[0]))
        fail(errc::numeric, "minimize_simplex: objective not finite at x0");

    std::vector<int> order(n + 1);
    std::iota(order.begin(), order.end(), 0);
    auto sort_order = [&] {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fvals[a] < fvals[b]; });
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    int iter = 0;
    bool converged = false;

    for (; iter < options.max_iter; ++iter) {
        sort_order();
        if (std::abs(fvals[order[n]] - fvals[order[0]]) <= options.f_tol &&
            spread_x(verts, order) <= options.x_tol) {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += verts[order[k]][i];
        for (std::size_t i = 0; i < n; ++i) centroid[i] /= static_cast<double>(n);

        int worst = order[n];
        double f_best = fvals[order[0]];
        double f_second = fvals[order[n - 1]];
        double f_worst = fvals[worst];

        for (std::size_t i = 0; i < n; ++i)
            xr[i] = centroid[i] + alpha * (centroid[i] - verts[worst][i]);
        double fr = objective(xr);

        if (fr < f_best) {
            for (std::size_t i = 0; i < n; ++i)
                xe[i] = centroid[i] + gamma * (xr[i] - centroid[i]);
            double fe = objective(xe);
            if (fe < fr) {
                verts[worst] = xe;
                fvals[worst] = fe;
            } else {
                verts[worst] = xr;
                fvals[worst] = fr;
            }
            continue;
        }
        if (fr < f_second) {
            verts[worst] = xr;
            fvals[worst] = fr;
            continue;
        }

        bool outside = fr < f_worst;
        const std::vector<double>& toward = outside ? xr : verts[worst];
        for (std::size_t i = 0; i < n; ++i)
            xc[i] = centroid[i] + rho * (toward[i] - centroid[i]);
        double fc = objective(xc);
        if (fc < (outside ? fr : f_worst)) {
            verts[worst] = xc;
            fvals[worst] = fc;
            continue;
        }

        // shrink toward best
        const std::vector<double> best_vert = verts[order[0]];
        for (std::size_t k = 0; k <= n; ++k) {
            if (order[k] == order[0]) continue;
            std::vector<double>& v = verts[order[k]];
            for (std::size_t i = 0; i < n; ++i)
                v[i] = best_vert[i] + sigma * (v[i] - best_vert[i]);
            fvals[order[k]] = objective(v);
        }
    }

    sort_order();
    OptimResult result;
    result.x_star = verts[order[0]];
    result.f_star = fvals[order[0]];
    result.iterations = iter;
    result.converged = converged;
    return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        fail(errc::invalid_argument, "adam_step: dimension mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) fail(errc::numeric, "adam_step: non-finite gradient element");

    const AdamHyper& h = state.hyper;
    state.t += 1;
    double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grads[i];
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
}

std::vector<double> finite_diff_gradient(const Objective& f, std::span<const double> x, double h) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = point[i];
        point[i] = orig + h;
        double fp = f(point);
        point[i] = orig - h;
        double fm = f(point);
        point[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            fail(errc::numeric, "finite_diff_gradient: non-finite evaluation");
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double check_gradient(std::span<const double> analytic, std::span<const double> numeric) {
    if (analytic.size() != numeric.size())
        fail(errc::invalid_argument, "check_gradient: dimension mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double denom = std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric[i]));
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

}  // namespace fts
