#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fts {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
    int max_iter = 2000;
    double f_tol = 1e-10;
    double x_tol = 1e-8;
};

struct OptimResult {
    std::vector<double> x_star;
    double f_star = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Nelder-Mead simplex descent. Reflection 1, expansion 2, contraction 0.5,
// shrink 0.5; initial simplex perturbs coordinate i by max(0.05*|x0_i|, 0.00025).
// Converged when both the function spread and the vertex spread of the simplex
// drop below the tolerances. Never returns a point worse than x0.
OptimResult minimize_simplex(const Objective& objective, std::span<const double> x0,
                             const SimplexOptions& options = {});

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;  // first-moment estimate
    std::vector<double> v;  // second-moment estimate
    long t = 0;
    AdamHyper hyper;

    explicit AdamState(std::size_t dim, AdamHyper h = {})
        : m(dim, 0.0), v(dim, 0.0), hyper(h) {}
};

// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
std::vector<double> finite_diff_gradient(const Objective& f, std::span<const double> x,
                                         double h = 1e-5);

// Max over i of |a_i - n_i| / max(1e-8, |a_i| + |n_i|).
double check_gradient(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace fts
