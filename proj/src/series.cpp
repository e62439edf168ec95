#include "fts/series.hpp"

#include <cmath>

#include "fts/error.hpp"

namespace fts {

const char* return_kind_name(ReturnKind kind) {
    return kind == ReturnKind::simple ? "simple" : "log";
}

ReturnKind return_kind_from_name(std::string_view name) {
    if (name == "simple") return ReturnKind::simple;
    if (name == "log") return ReturnKind::log;
    fail(errc::invalid_argument, "unknown return kind: '" + std::string(name) + "'");
}

void PriceSeries::validate() const {
    if (dates.size() != closes.size())
        fail(errc::invalid_argument, "price series: dates and closes length mismatch");
    for (std::size_t i = 0; i < closes.size(); ++i) {
        if (!(closes[i] > 0.0) || !std::isfinite(closes[i]))
            fail(errc::invalid_argument,
                 "price series: non-positive close at " + dates[i].iso());
        if (i > 0 && !(dates[i - 1] < dates[i]))
            fail(errc::invalid_argument,
                 "price series: dates not strictly increasing at " + dates[i].iso());
    }
}

PriceSeries make_price_series(std::vector<Date> dates, std::vector<double> closes) {
    PriceSeries series{std::move(dates), std::move(closes)};
    series.validate();
    return series;
}

ReturnSeries compute_returns(const PriceSeries& prices, ReturnKind kind) {
    prices.validate();
    if (prices.size() < 2)
        fail(errc::invalid_argument, "compute_returns: need at least 2 prices");

    ReturnSeries out;
    out.kind = kind;
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    out.values.resize(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        double ratio = prices.closes[i] / prices.closes[i - 1];
        out.values[i - 1] = kind == ReturnKind::simple ? ratio - 1.0 : std::log(ratio);
    }
    return out;
}

std::vector<double> difference(std::span<const double> series, int d) {
    if (d < 0) fail(errc::invalid_argument, "difference: d must be >= 0");
    if (series.size() <= static_cast<std::size_t>(d))
        fail(errc::invalid_argument, "difference: series of length " +
                                         std::to_string(series.size()) +
                                         " too short for d=" + std::to_string(d));
    std::vector<double> out(series.begin(), series.end());
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

SplitSeries train_test_split(const ReturnSeries& series, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        fail(errc::invalid_argument, "train_test_split: train_fraction must lie in (0,1)");
    std::size_t n = series.size();
    auto train_len = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    if (train_len < 1 || n - train_len < 1)
        fail(errc::invalid_argument,
             "train_test_split: series of length " + std::to_string(n) +
                 " leaves an empty half at fraction " + std::to_string(train_fraction));

    SplitSeries split;
    split.train_fraction = train_fraction;
    split.train.kind = split.test.kind = series.kind;
    split.train.dates.assign(series.dates.begin(), series.dates.begin() + train_len);
    split.train.values.assign(series.values.begin(), series.values.begin() + train_len);
    split.test.dates.assign(series.dates.begin() + train_len, series.dates.end());
    split.test.values.assign(series.values.begin() + train_len, series.values.end());
    return split;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size())
        fail(errc::invalid_argument, "rmse: length mismatch (" + std::to_string(predicted.size()) +
                                         " vs " + std::to_string(actual.size()) + ")");
    if (predicted.empty()) fail(errc::invalid_argument, "rmse: empty inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double diff = predicted[i] - actual[i];
        acc += diff * diff;
    }
    return std::sqrt(acc / static_cast<double>(predicted.size()));
}

double mean(std::span<const double> values) {
    if (values.empty()) fail(errc::invalid_argument, "mean: empty input");
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
    double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return acc / static_cast<double>(values.size());
}

}  // namespace fts
