#pragma once

#include <span>
#include <vector>

#include "fts/date.hpp"

namespace fts {

enum class ReturnKind { simple, log };

const char* return_kind_name(ReturnKind kind);
ReturnKind return_kind_from_name(std::string_view name);

// Date-indexed daily close prices. Dates strictly ascending, closes positive.
struct PriceSeries {
    std::vector<Date> dates;
    std::vector<double> closes;

    std::size_t size() const { return dates.size(); }
    void validate() const;
};

PriceSeries make_price_series(std::vector<Date> dates, std::vector<double> closes);

// Returns derived from a PriceSeries; one value per consecutive price pair,
// stamped with the later date.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    ReturnKind kind = ReturnKind::simple;

    std::size_t size() const { return values.size(); }
};

struct SplitSeries {
    ReturnSeries train;
    ReturnSeries test;
    double train_fraction = 0.0;
};

ReturnSeries compute_returns(const PriceSeries& prices, ReturnKind kind);

// Applies first differences d times; d = 0 is the identity.
std::vector<double> difference(std::span<const double> series, int d);

// Chronological cut: train gets floor(n * train_fraction), remainder goes to test.
SplitSeries train_test_split(const ReturnSeries& series, double train_fraction = 0.75);

double rmse(std::span<const double> predicted, std::span<const double> actual);

double mean(std::span<const double> values);
double variance(std::span<const double> values);  // population variance

}  // namespace fts
