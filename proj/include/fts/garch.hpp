#pragma once

#include <array>
#include <span>
#include <vector>

#include "fts/numerics.hpp"
#include "fts/series.hpp"

namespace fts {

struct GarchParams {
    double mu = 0.0;
    double alpha0 = 0.0;  // variance constant, must be > 0
    double alpha1 = 0.0;  // ARCH coefficient, >= 0
    double beta1 = 0.0;   // GARCH coefficient, >= 0

    bool valid() const;
    bool covariance_stationary() const { return alpha1 + beta1 < 1.0; }
    double unconditional_variance() const { return alpha0 / (1.0 - alpha1 - beta1); }
};

struct GarchFit {
    GarchParams params;
    std::vector<double> sigma2_path;  // conditional variance per observation
    std::vector<double> residuals;    // r_t - mu
    double loglik = 0.0;
};

struct GarchForecast {
    std::vector<double> mean;      // mu at every horizon
    std::vector<double> variance;  // variance recursion per horizon
};

// Conditional-variance recursion sigma2_t = a0 + a1 eps_{t-1}^2 + b1 sigma2_{t-1}
// started from sigma2_init. Output length equals returns length.
std::vector<double> garch_filter(const GarchParams& params, std::span<const double> returns,
                                 double sigma2_init);

// Gaussian log-likelihood with the filtered variance path. Invalid parameters
// yield -inf so optimizers can treat them as rejected rather than aborting.
double garch_log_likelihood(const GarchParams& params, std::span<const double> returns,
                            double sigma2_init);

// Variant that initializes sigma2 to the mean of (r - mu)^2.
double garch_log_likelihood(const GarchParams& params, std::span<const double> returns);

struct GarchFitOptions {
    SimplexOptions simplex{.max_iter = 4000, .f_tol = 1e-12, .x_tol = 1e-10};
    int restarts = 2;  // re-run the simplex from the found optimum
};

// MLE via simplex descent on an unconstrained reparameterization: log for
// alpha0, multinomial-logit for (alpha1, beta1) onto the open simplex
// alpha1 + beta1 < 1 (covariance stationarity holds by construction).
GarchFit fit_garch(const ReturnSeries& series, const GarchFitOptions& opts = {});

// Mean forecast is mu at every horizon; variance follows one exact step from
// the latest state, then sigma2_{t+h} = a0 + (a1+b1) sigma2_{t+h-1}.
GarchForecast forecast_garch(const GarchFit& fit, int horizon);

// Reparameterization used by the fitter, exposed for round-trip checks.
// u = {mu, ln a0, ln(a1/s), ln(b1/s)} with s = 1 - a1 - b1.
std::array<double, 4> garch_to_unconstrained(const GarchParams& params);
GarchParams garch_from_unconstrained(std::span<const double> u);

}  // namespace fts
