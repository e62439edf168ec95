#include "fts/arima.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

#include "fts/error.hpp"

namespace fts {

namespace {

constexpr double kHuge = 1e100;

// Residual recursion shared by the objective, the fit, and the forecasters.
// Writes eps_t for t in [p, n) of the differenced series; earlier residuals
// are treated as zero. Returns the sum of squares, or kHuge on divergence.
double css_recursion(std::span<const double> params, std::span<const double> z, int p, int q,
                     std::vector<double>* residuals_out) {
    const double c = params[0];
    const double* phi = params.data() + 1;
    const double* theta = params.data() + 1 + p;
    const auto n = static_cast<int>(z.size());

    std::vector<double> eps(static_cast<std::size_t>(n), 0.0);
    double css = 0.0;
    for (int t = p; t < n; ++t) {
        double pred = c;
        for (int i = 1; i <= p; ++i) pred += phi[i - 1] * z[t - i];
        for (int j = 1; j <= q; ++j)
            if (t - j >= p) pred -= theta[j - 1] * eps[t - j];
        double e = z[t] - pred;
        if (!std::isfinite(e)) return kHuge;
        eps[t] = e;
        css += e * e;
    }
    if (!std::isfinite(css)) return kHuge;
    if (residuals_out) residuals_out->assign(eps.begin() + p, eps.end());
    return css;
}

// OLS seed: regress z_t on an intercept and its first p lags. Falls back to
// the sample mean when the design is degenerate.
std::vector<double> seed_params(std::span<const double> z, int p, int q) {
    std::vector<double> start(static_cast<std::size_t>(1 + p + q), 0.0);
    start[0] = mean(z);
    if (p == 0) return start;

    const auto n = static_cast<int>(z.size());
    const int rows = n - p;
    if (rows <= p + 1) return start;

    Eigen::MatrixXd design(rows, p + 1);
    Eigen::VectorXd target(rows);
    for (int t = p; t < n; ++t) {
        design(t - p, 0) = 1.0;
        for (int i = 1; i <= p; ++i) design(t - p, i) = z[t - i];
        target(t - p) = z[t];
    }
    Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
    if (!beta.allFinite()) return start;
    start[0] = beta(0);
    for (int i = 0; i < p; ++i) start[1 + i] = beta(i + 1);
    return start;
}

// Prediction of the original-scale value at index i from a differenced-scale
// prediction, inverting z_t = sum_k (-1)^k C(d,k) x_{i-k}.
double undifference_one(double z_pred, std::span<const double> levels, std::size_t i, int d) {
    double value = z_pred;
    double binom = 1.0;
    for (int k = 1; k <= d; ++k) {
        binom = binom * (d - k + 1) / k;
        double sign = (k % 2 == 1) ? 1.0 : -1.0;
        value += sign * binom * levels[i - k];
    }
    return value;
}

struct ForecastState {
    std::vector<double> z;    // differenced history, extended by predictions in multi-step
    std::vector<double> eps;  // realized residuals (zero pre-sample and for future steps)
};

ForecastState prepare_state(const ArimaFit& fit, std::span<const double> history) {
    const int d = fit.order.d;
    if (history.size() <= static_cast<std::size_t>(d))
        fail(errc::invalid_argument, "arima forecast: history shorter than differencing degree");
    ForecastState st;
    st.z = difference(history, d);
    st.eps.assign(st.z.size(), 0.0);

    std::vector<double> params;
    params.push_back(fit.c);
    params.insert(params.end(), fit.phi.begin(), fit.phi.end());
    params.insert(params.end(), fit.theta.begin(), fit.theta.end());
    std::vector<double> resid;
    css_recursion(params, st.z, fit.order.p, fit.order.q, &resid);
    std::copy(resid.begin(), resid.end(), st.eps.begin() + fit.order.p);
    return st;
}

double predict_z(const ArimaFit& fit, const std::vector<double>& z, const std::vector<double>& eps,
                 std::size_t t) {
    double pred = fit.c;
    for (int i = 1; i <= fit.order.p; ++i) pred += fit.phi[i - 1] * z[t - i];
    for (int j = 1; j <= fit.order.q; ++j) {
        // MA memory is exhausted beyond the available residual history
        if (t >= static_cast<std::size_t>(j) && t - j < eps.size())
            pred -= fit.theta[j - 1] * eps[t - j];
    }
    return pred;
}

}  // namespace

std::string ArimaOrder::label() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
}

const char* criterion_name(Criterion c) {
    switch (c) {
        case Criterion::aic: return "aic";
        case Criterion::bic: return "bic";
        case Criterion::mse: return "mse";
    }
    return "unknown";
}

Criterion criterion_from_name(std::string_view name) {
    if (name == "aic") return Criterion::aic;
    if (name == "bic") return Criterion::bic;
    if (name == "mse") return Criterion::mse;
    fail(errc::invalid_argument, "unknown order-selection criterion: '" + std::string(name) + "'");
}

double arima_css_objective(std::span<const double> params, std::span<const double> series,
                           int p, int q) {
    if (p < 0 || q < 0) fail(errc::invalid_argument, "arima_css_objective: negative order");
    if (params.size() != static_cast<std::size_t>(1 + p + q))
        fail(errc::invalid_argument, "arima_css_objective: params must pack {c, phi, theta}");
    if (series.size() <= static_cast<std::size_t>(p + q))
        fail(errc::invalid_argument, "arima_css_objective: series too short for order");
    return css_recursion(params, series, p, q, nullptr);
}

bool ar_roots_outside_unit_circle(std::span<const double> phi) {
    const auto p = static_cast<int>(phi.size());
    if (p == 0) return true;
    // companion-matrix eigenvalues are the inverse roots
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) companion(0, i) = phi[i];
    for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    Eigen::VectorXcd eig = companion.eigenvalues();
    for (int i = 0; i < p; ++i)
        if (std::abs(eig(i)) >= 1.0) return false;
    return true;
}

ArimaFit fit_arima(const ReturnSeries& series, ArimaOrder order, const ArimaOptions& opts) {
    if (order.p < 0 || order.d < 0 || order.q < 0)
        fail(errc::invalid_argument, "fit_arima: order components must be non-negative");

    std::vector<double> z = difference(series.values, order.d);
    const auto n = static_cast<int>(z.size());
    const int p = order.p, q = order.q;
    if (n < p + q + 2)
        fail(errc::invalid_argument, "fit_arima: series too short for order " + order.label());
    if (variance(z) <= 0.0)
        fail(errc::numeric, "fit_arima: degenerate variance (constant series)");

    std::vector<double> start = seed_params(z, p, q);
    auto objective = [&](std::span<const double> params) {
        // reject non-invertible MA candidates; zeroed pre-sample residuals make
        // their CSS spuriously small
        if (q > 0 &&
            !ar_roots_outside_unit_circle(params.subspan(static_cast<std::size_t>(1 + p))))
            return 1e100;
        return css_recursion(params, z, p, q, nullptr);
    };
    OptimResult opt = minimize_simplex(objective, start, opts.simplex);

    ArimaFit fit;
    fit.order = order;
    fit.c = opt.x_star[0];
    fit.phi.assign(opt.x_star.begin() + 1, opt.x_star.begin() + 1 + p);
    fit.theta.assign(opt.x_star.begin() + 1 + p, opt.x_star.end());

    double css = css_recursion(opt.x_star, z, p, q, &fit.residuals);
    const int n_eff = n - p;
    fit.sigma2 = css / n_eff;
    if (!(fit.sigma2 > 0.0) || !std::isfinite(fit.sigma2))
        fail(errc::numeric, "fit_arima: degenerate residual variance at optimum");

    fit.mse = fit.sigma2;
    fit.loglik = -0.5 * n_eff * (std::log(2.0 * std::numbers::pi) + std::log(fit.sigma2) + 1.0);
    const int k = p + q + 2;
    fit.aic = 2.0 * k - 2.0 * fit.loglik;
    fit.bic = k * std::log(static_cast<double>(n_eff)) - 2.0 * fit.loglik;
    fit.stationary = ar_roots_outside_unit_circle(fit.phi);
    if (opts.enforce_stationarity && !fit.stationary)
        fail(errc::numeric, "fit_arima: non-stationary AR polynomial for order " + order.label());
    return fit;
}

OrderSelection select_order(const ReturnSeries& series, int p_max, int d_max, int q_max,
                            Criterion criterion, const ArimaOptions& opts) {
    if (p_max < 0 || q_max < 0 || d_max < 0 || d_max > 1)
        fail(errc::invalid_argument, "select_order: need p_max,q_max >= 0 and d_max in {0,1}");

    OrderSelection sel;
    bool have_best = false;
    ArimaOrder best_order;
    double best_value = std::numeric_limits<double>::infinity();

    for (int d = 0; d <= d_max; ++d) {
        for (int p = 0; p <= p_max; ++p) {
            for (int q = 0; q <= q_max; ++q) {
                OrderCell cell;
                cell.order = {p, d, q};
                try {
                    ArimaFit fit = fit_arima(series, cell.order, opts);
                    cell.ok = true;
                    cell.aic = fit.aic;
                    cell.bic = fit.bic;
                    cell.mse = fit.mse;
                } catch (const Error& e) {
                    cell.error = e.what();
                }
                if (cell.ok) {
                    double value = criterion == Criterion::aic   ? cell.aic
                                   : criterion == Criterion::bic ? cell.bic
                                                                 : cell.mse;
                    auto better = [&] {
                        if (value != best_value) return value < best_value;
                        int sum = p + q, best_sum = best_order.p + best_order.q;
                        if (sum != best_sum) return sum < best_sum;
                        if (p != best_order.p) return p < best_order.p;
                        return d < best_order.d;
                    };
                    if (!have_best || better()) {
                        have_best = true;
                        best_order = cell.order;
                        best_value = value;
                    }
                }
                sel.cells.push_back(std::move(cell));
            }
        }
    }
    if (!have_best) fail(errc::numeric, "select_order: every grid cell failed to fit");
    sel.best = best_order;
    sel.best_value = best_value;
    return sel;
}

std::vector<double> forecast_one_step(const ArimaFit& fit, std::span<const double> history,
                                      int test_len) {
    const auto n = static_cast<int>(history.size());
    if (test_len < 1) fail(errc::invalid_argument, "forecast_one_step: test_len must be >= 1");
    if (test_len >= n)
        fail(errc::invalid_argument, "forecast_one_step: test_len must be smaller than history");

    ForecastState st = prepare_state(fit, history);
    const auto m = static_cast<int>(st.z.size());
    const int first = m - test_len;
    if (first < fit.order.p)
        fail(errc::invalid_argument,
             "forecast_one_step: history prefix too short for order " + fit.order.label());

    std::vector<double> preds;
    preds.reserve(static_cast<std::size_t>(test_len));
    for (int t = first; t < m; ++t) {
        double z_hat = predict_z(fit, st.z, st.eps, static_cast<std::size_t>(t));
        preds.push_back(undifference_one(z_hat, history,
                                         static_cast<std::size_t>(t + fit.order.d), fit.order.d));
    }
    return preds;
}

std::vector<double> forecast_multi_step(const ArimaFit& fit, std::span<const double> history,
                                        int horizon) {
    if (horizon < 1) fail(errc::invalid_argument, "forecast_multi_step: horizon must be >= 1");

    ForecastState st = prepare_state(fit, history);
    std::vector<double> levels(history.begin(), history.end());

    std::vector<double> preds;
    preds.reserve(static_cast<std::size_t>(horizon));
    for (int h = 0; h < horizon; ++h) {
        std::size_t t = st.z.size();
        st.z.push_back(0.0);  // placeholder so predict_z can index the lags
        double z_hat = predict_z(fit, st.z, st.eps, t);
        st.z.back() = z_hat;   // future residuals stay zero
        st.eps.push_back(0.0);
        double level = undifference_one(z_hat, levels, levels.size(), fit.order.d);
        levels.push_back(level);
        preds.push_back(level);
    }
    return preds;
}

}  // namespace fts
