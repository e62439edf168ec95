#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fts/garch.hpp"
#include "fts/rng.hpp"
#include "fts/series.hpp"
#include "fts/text_types.hpp"

namespace fts {

struct ArmaSpec {
    double c = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;  // MA sign convention matches the ARIMA module
    double sigma = 1.0;         // innovation standard deviation
};

// Simulates the ARMA recursion with Gaussian innovations; the first 200
// burn-in draws are discarded.
std::vector<double> gen_arma(const ArmaSpec& spec, int n, std::uint64_t seed);

// Simulates the GARCH(1,1) recursion with standard-normal z_t; burn-in 200.
std::vector<double> gen_garch(const GarchParams& params, int n, std::uint64_t seed);

struct TextFixture {
    PriceSeries prices;
    std::vector<NewsItem> news;
    double planted_correlation = 0.0;  // corr(sentiment sign, next-day return)
    int n_days = 0;
    std::uint64_t seed = 0;
};

// Random-walk prices over a weekday calendar plus templated headlines whose
// sentiment word agrees with the following trading day's return most of the
// time. Byte-identical output under a fixed seed.
TextFixture gen_text_fixture(int n_days, std::uint64_t seed);

}  // namespace fts
