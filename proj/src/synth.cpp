#include "fts/synth.hpp"

#include <array>
#include <cmath>

#include "fts/arima.hpp"
#include "fts/error.hpp"

namespace fts {

namespace {

constexpr int kBurnIn = 200;

const std::array<const char*, 5> kPositiveVerbs = {"surges", "rallies", "climbs", "jumps",
                                                   "gains"};
const std::array<const char*, 5> kNegativeVerbs = {"plunges", "slides", "tumbles", "drops",
                                                   "sinks"};
const std::array<const char*, 5> kSubjects = {"stocks", "the index", "wall street", "equities",
                                              "the market"};
const std::array<const char*, 6> kReasons = {
    "traders weigh earnings",  "fed minutes loom",  "tech leads the move",
    "oil steadies",            "volatility eases",  "data surprises"};
const std::array<const char*, 3> kSources = {"CNBC", "Bloomberg", "Yahoo Finance"};

}  // namespace

std::vector<double> gen_arma(const ArmaSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) fail(errc::invalid_argument, "gen_arma: n must be >= 1");
    if (!(spec.sigma > 0.0)) fail(errc::invalid_argument, "gen_arma: sigma must be > 0");
    if (!ar_roots_outside_unit_circle(spec.phi))
        fail(errc::invalid_argument, "gen_arma: explosive AR parameters");

    const auto p = static_cast<int>(spec.phi.size());
    const auto q = static_cast<int>(spec.theta.size());
    const int total = n + kBurnIn;

    Rng rng(seed);
    std::vector<double> y(total, 0.0);
    std::vector<double> eps(total, 0.0);
    for (int t = 0; t < total; ++t) {
        eps[t] = spec.sigma * rng.next_normal();
        double value = spec.c + eps[t];
        for (int i = 1; i <= p; ++i)
            if (t - i >= 0) value += spec.phi[i - 1] * y[t - i];
        for (int j = 1; j <= q; ++j)
            if (t - j >= 0) value -= spec.theta[j - 1] * eps[t - j];
        y[t] = value;
    }
    return {y.begin() + kBurnIn, y.end()};
}

std::vector<double> gen_garch(const GarchParams& params, int n, std::uint64_t seed) {
    if (n < 1) fail(errc::invalid_argument, "gen_garch: n must be >= 1");
    if (!params.valid()) fail(errc::invalid_argument, "gen_garch: invalid parameters");
    if (!params.covariance_stationary())
        fail(errc::invalid_argument, "gen_garch: alpha1 + beta1 must be < 1");

    Rng rng(seed);
    const int total = n + kBurnIn;
    std::vector<double> r(total);
    double sigma2 = params.unconditional_variance();
    double eps_prev = 0.0;
    for (int t = 0; t < total; ++t) {
        if (t > 0)
            sigma2 = params.alpha0 + params.alpha1 * eps_prev * eps_prev + params.beta1 * sigma2;
        double eps = std::sqrt(sigma2) * rng.next_normal();
        r[t] = params.mu + eps;
        eps_prev = eps;
    }
    return {r.begin() + kBurnIn, r.end()};
}

TextFixture gen_text_fixture(int n_days, std::uint64_t seed) {
    if (n_days < 10) fail(errc::invalid_argument, "gen_text_fixture: n_days must be >= 10");

    Rng rng(seed);
    TextFixture fx;
    fx.n_days = n_days;
    fx.seed = seed;

    // weekday calendar from 2019-01-02
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(n_days));
    Date day = Date::from_ymd(2019, 1, 2);
    while (static_cast<int>(dates.size()) < n_days) {
        auto wd = day.weekday();
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) dates.push_back(day);
        day = day.next_day();
    }

    std::vector<double> closes(static_cast<std::size_t>(n_days));
    closes[0] = 2500.0;
    for (int t = 1; t < n_days; ++t) {
        double r = 0.0003 + 0.01 * rng.next_normal();
        closes[t] = closes[t - 1] * (1.0 + r);
    }
    fx.prices = make_price_series(dates, closes);

    // Headlines are stamped on the morning of the trading day whose return
    // they lean on, so calendar alignment lands them on that day.
    double sum_x = 0, sum_y = 0, sum_xx = 0, sum_yy = 0, sum_xy = 0;
    int n_items = 0;
    for (int t = 0; t + 1 < n_days; ++t) {
        if (t > 0 && rng.next_below(20) == 0) continue;  // occasional quiet day
        double next_ret = closes[t + 1] / closes[t] - 1.0;
        int item_count = 1 + static_cast<int>(rng.next_below(2));
        for (int k = 0; k < item_count; ++k) {
            bool agree = rng.next_below(100) < 85;
            bool positive = (next_ret >= 0.0) == agree;
            const char* verb = positive ? kPositiveVerbs[rng.next_below(kPositiveVerbs.size())]
                                        : kNegativeVerbs[rng.next_below(kNegativeVerbs.size())];
            const char* subject = kSubjects[rng.next_below(kSubjects.size())];
            const char* reason = kReasons[rng.next_below(kReasons.size())];
            const char* amount = std::abs(next_ret) > 0.01 ? "sharply" : "modestly";

            NewsItem item;
            // morning of calendar day after trading day t; the next trading
            // day at or after that date is exactly trading day t+1
            std::int64_t base = std::int64_t{dates[t].days_since_epoch() + 1} * 86400;
            item.timestamp = Timestamp{base + 8 * 3600 + static_cast<std::int64_t>(rng.next_below(7200))};
            item.source = kSources[rng.next_below(kSources.size())];
            item.text = std::string(subject) + " " + verb + " " + amount + " as " + reason;
            fx.news.push_back(std::move(item));

            double x = positive ? 1.0 : -1.0;
            sum_x += x;
            sum_y += next_ret;
            sum_xx += x * x;
            sum_yy += next_ret * next_ret;
            sum_xy += x * next_ret;
            ++n_items;
        }
    }

    double cov = sum_xy / n_items - (sum_x / n_items) * (sum_y / n_items);
    double var_x = sum_xx / n_items - (sum_x / n_items) * (sum_x / n_items);
    double var_y = sum_yy / n_items - (sum_y / n_items) * (sum_y / n_items);
    fx.planted_correlation =
        (var_x > 0 && var_y > 0) ? cov / std::sqrt(var_x * var_y) : 0.0;
    return fx;
}

}  // namespace fts
