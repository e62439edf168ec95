#include "fts/garch.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fts/error.hpp"

namespace fts {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

bool GarchParams::valid() const {
    return std::isfinite(mu) && alpha0 > 0.0 && alpha1 >= 0.0 && beta1 >= 0.0 &&
           std::isfinite(alpha0) && std::isfinite(alpha1) && std::isfinite(beta1);
}

std::vector<double> garch_filter(const GarchParams& params, std::span<const double> returns,
                                 double sigma2_init) {
    if (!params.valid()) fail(errc::invalid_argument, "garch_filter: invalid parameters");
    if (!(sigma2_init > 0.0)) fail(errc::invalid_argument, "garch_filter: sigma2_init must be > 0");
    if (returns.empty()) fail(errc::invalid_argument, "garch_filter: empty return series");

    std::vector<double> sigma2(returns.size());
    sigma2[0] = sigma2_init;
    for (std::size_t t = 1; t < returns.size(); ++t) {
        double eps_prev = returns[t - 1] - params.mu;
        sigma2[t] = params.alpha0 + params.alpha1 * eps_prev * eps_prev +
                    params.beta1 * sigma2[t - 1];
        if (!std::isfinite(sigma2[t]))
            fail(errc::numeric, "garch_filter: recursion diverged");
    }
    return sigma2;
}

double garch_log_likelihood(const GarchParams& params, std::span<const double> returns,
                            double sigma2_init) {
    if (!params.valid() || !(sigma2_init > 0.0) || returns.empty()) return kNegInf;

    double loglik = 0.0;
    double sigma2 = sigma2_init;
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (t > 0) {
            double eps_prev = returns[t - 1] - params.mu;
            sigma2 = params.alpha0 + params.alpha1 * eps_prev * eps_prev + params.beta1 * sigma2;
        }
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) return kNegInf;
        double eps = returns[t] - params.mu;
        loglik += -0.5 * (log2pi + std::log(sigma2)) - eps * eps / (2.0 * sigma2);
    }
    return std::isfinite(loglik) ? loglik : kNegInf;
}

double garch_log_likelihood(const GarchParams& params, std::span<const double> returns) {
    if (returns.empty()) return kNegInf;
    double init = 0.0;
    for (double r : returns) init += (r - params.mu) * (r - params.mu);
    init /= static_cast<double>(returns.size());
    if (!(init > 0.0)) return kNegInf;
    return garch_log_likelihood(params, returns, init);
}

std::array<double, 4> garch_to_unconstrained(const GarchParams& params) {
    if (!params.valid() || !params.covariance_stationary())
        fail(errc::invalid_argument, "garch_to_unconstrained: parameters outside the stationary region");
    double slack = 1.0 - params.alpha1 - params.beta1;
    return {params.mu, std::log(params.alpha0), std::log(params.alpha1 / slack),
            std::log(params.beta1 / slack)};
}

GarchParams garch_from_unconstrained(std::span<const double> u) {
    if (u.size() != 4) fail(errc::invalid_argument, "garch_from_unconstrained: need 4 values");
    GarchParams p;
    p.mu = u[0];
    p.alpha0 = std::exp(u[1]);
    double ea = std::exp(u[2]);
    double eb = std::exp(u[3]);
    double denom = 1.0 + ea + eb;
    p.alpha1 = ea / denom;
    p.beta1 = eb / denom;
    return p;
}

GarchFit fit_garch(const ReturnSeries& series, const GarchFitOptions& opts) {
    const auto& r = series.values;
    if (r.size() < 2) fail(errc::invalid_argument, "fit_garch: need at least 2 observations");
    if (variance(r) <= 0.0) fail(errc::numeric, "fit_garch: zero-variance series");

    GarchParams start;
    start.mu = mean(r);
    start.alpha1 = 0.1;
    start.beta1 = 0.8;
    start.alpha0 = 0.1 * variance(r);
    std::array<double, 4> u0 = garch_to_unconstrained(start);

    auto objective = [&](std::span<const double> u) {
        double ll = garch_log_likelihood(garch_from_unconstrained(u), r);
        return std::isfinite(ll) ? -ll : 1e100;
    };

    OptimResult opt = minimize_simplex(objective, u0, opts.simplex);
    for (int k = 0; k < opts.restarts; ++k) {
        OptimResult again = minimize_simplex(objective, opt.x_star, opts.simplex);
        if (again.f_star >= opt.f_star) break;
        opt = again;
    }

    GarchFit fit;
    fit.params = garch_from_unconstrained(opt.x_star);
    fit.loglik = -opt.f_star;

    double init = 0.0;
    for (double x : r) init += (x - fit.params.mu) * (x - fit.params.mu);
    init /= static_cast<double>(r.size());
    fit.sigma2_path = garch_filter(fit.params, r, init);
    fit.residuals.resize(r.size());
    for (std::size_t t = 0; t < r.size(); ++t) fit.residuals[t] = r[t] - fit.params.mu;
    return fit;
}

GarchForecast forecast_garch(const GarchFit& fit, int horizon) {
    if (horizon < 1) fail(errc::invalid_argument, "forecast_garch: horizon must be >= 1");
    if (fit.sigma2_path.empty() || fit.residuals.empty())
        fail(errc::invalid_argument, "forecast_garch: fit carries no filtered state");

    const GarchParams& p = fit.params;
    GarchForecast fc;
    fc.mean.assign(static_cast<std::size_t>(horizon), p.mu);
    fc.variance.resize(static_cast<std::size_t>(horizon));

    double eps_last = fit.residuals.back();
    double sigma2_last = fit.sigma2_path.back();
    fc.variance[0] = p.alpha0 + p.alpha1 * eps_last * eps_last + p.beta1 * sigma2_last;
    for (int h = 1; h < horizon; ++h)
        fc.variance[h] = p.alpha0 + (p.alpha1 + p.beta1) * fc.variance[h - 1];
    return fc;
}

}  // namespace fts
