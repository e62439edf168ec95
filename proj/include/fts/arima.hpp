#pragma once

#include <span>
#include <string>
#include <vector>

#include "fts/numerics.hpp"
#include "fts/series.hpp"

namespace fts {

struct ArimaOrder {
    int p = 0;  // AR lags
    int d = 0;  // differencing degree
    int q = 0;  // MA lags

    std::string label() const;  // "(p,d,q)"
    bool operator==(const ArimaOrder&) const = default;
};

struct ArimaOptions {
    bool enforce_stationarity = false;
    SimplexOptions simplex{.max_iter = 5000, .f_tol = 1e-13, .x_tol = 1e-10};
};

// Conditional-sum-of-squares fit. Estimation runs on the d-times differenced
// series; the recursion starts at t = p+1 with pre-sample residuals zeroed,
// and the search is restricted to invertible MA polynomials.
// MA terms carry the sign convention y_t = c + sum(phi_i y_{t-i})
// - sum(theta_j eps_{t-j}) + eps_t.
struct ArimaFit {
    ArimaOrder order;
    double c = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
    double sigma2 = 0.0;
    std::vector<double> residuals;  // eps_t for t = p+1 .. n of the differenced series
    double loglik = 0.0;
    double aic = 0.0;   // 2k - 2 loglik, k = p + q + 2 (intercept and variance)
    double bic = 0.0;   // k ln(n_eff) - 2 loglik
    double mse = 0.0;   // mean of squared residuals
    bool stationary = true;  // AR polynomial roots outside the unit circle
};

// Sum of squared residuals of the Eq.-style recursion over a differenced
// series. params packs {c, phi_1..phi_p, theta_1..theta_q}.
double arima_css_objective(std::span<const double> params, std::span<const double> series,
                           int p, int q);

ArimaFit fit_arima(const ReturnSeries& series, ArimaOrder order, const ArimaOptions& opts = {});

enum class Criterion { aic, bic, mse };
const char* criterion_name(Criterion c);
Criterion criterion_from_name(std::string_view name);

struct OrderCell {
    ArimaOrder order;
    bool ok = false;
    double aic = 0.0, bic = 0.0, mse = 0.0;
    std::string error;  // set when the cell failed to fit
};

struct OrderSelection {
    ArimaOrder best;
    double best_value = 0.0;
    std::vector<OrderCell> cells;
};

// Fits every (p,d,q) in the grid and returns the criterion-minimizing order.
// Ties break toward smaller p+q, then smaller p, then smaller d.
OrderSelection select_order(const ReturnSeries& series, int p_max, int d_max, int q_max,
                            Criterion criterion, const ArimaOptions& opts = {});

// Walk-forward one-step forecasts over the last test_len points of history,
// parameters held fixed, residuals updated from realized values.
std::vector<double> forecast_one_step(const ArimaFit& fit, std::span<const double> history,
                                      int test_len);

// Iterated forecasts with unknown future residuals set to zero; with d >= 1
// the differenced forecasts are integrated back to levels.
std::vector<double> forecast_multi_step(const ArimaFit& fit, std::span<const double> history,
                                        int horizon);

// True when all roots of 1 - phi_1 z - ... - phi_p z^p lie outside the unit circle.
bool ar_roots_outside_unit_circle(std::span<const double> phi);

}  // namespace fts
