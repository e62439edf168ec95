#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "fts/series.hpp"
#include "fts/synth.hpp"
#include "fts/text_types.hpp"
#include "fts/training.hpp"

namespace fts {

// CSV with a header row; needs a date column and a close/price column.
// Accepts ISO and "Mon DD, YYYY" dates, quoted cells, thousands separators.
// Rows may arrive in any order; output is sorted ascending by date. Errors
// cite the physical line number (the header is line 1).
PriceSeries load_prices(const std::string& path);

// JSONL with one object per line: timestamp (RFC 3339), source, text.
// Blank lines are skipped; malformed lines and missing fields cite the line.
std::vector<NewsItem> load_news(const std::string& path);

// Writes prices.csv, news.jsonl, and manifest.json into dir.
void write_fixture(const TextFixture& fixture, const std::string& dir);

struct ArimaBenchConfig {
    int p_max = 5;
    int d_max = 1;
    int q_max = 5;
    std::string criterion = "aic";
};

struct GarchBenchConfig {
    int restarts = 2;
};

struct LstmBenchConfig {
    int lookback = 20;
    int hidden1 = 32;
    int hidden2 = 16;
    int epochs = 100;
    double lr = 1e-3;
    int batch_size = 0;  // 0 = full batch
};

struct TextBenchConfig {
    int d_model = 32;
    int n_heads = 2;
    int n_blocks = 2;
    int d_ff = 0;  // 0 = 4 * d_model
    int max_len = 64;
    int vocab_max = 5000;
    int min_freq = 1;
    int epochs = 100;
    double lr = 1e-3;
    double mask_prob = 0.15;
    int pretrain_epochs = 30;
};

struct BenchConfig {
    std::string prices_path;
    std::string news_path;  // empty = no news supplied
    std::string out_dir = "bench_out";
    std::string return_kind = "simple";
    double train_fraction = 0.75;
    std::uint64_t seed = 42;
    std::vector<std::string> models = {"arima", "garch", "lstm", "text_encoder",
                                       "text_encoder_adapted"};
    ArimaBenchConfig arima;
    GarchBenchConfig garch;
    LstmBenchConfig lstm;
    TextBenchConfig text;
};

BenchConfig load_config(const std::string& path);
BenchConfig config_from_json_text(const std::string& text);

// Dotted keys ("lstm.epochs", "seed", "models"); values as strings ("50",
// "arima,garch"). Unknown keys are an error.
void apply_override(BenchConfig& config, const std::string& key, const std::string& value);

// Canonical JSON (sorted keys) used for hashing and persistence.
std::string config_json(const BenchConfig& config);
std::string config_hash(const BenchConfig& config);

struct ModelResult {
    std::string name;
    bool ran = false;
    std::string notice;   // skip or failure reason when !ran
    double rmse = 0.0;    // meaningful only when ran
    std::string summary;  // one-line fitted description
    std::map<std::string, double> metrics;  // labeled supplementary scores

    bool operator==(const ModelResult&) const = default;
};

struct BenchmarkReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string return_kind;
    double train_fraction = 0.0;
    int n_returns = 0;
    int train_size = 0;
    int test_size = 0;
    std::string train_start, train_end, test_start, test_end;  // ISO dates
    std::vector<ModelResult> entries;

    bool operator==(const BenchmarkReport&) const = default;
};

std::string report_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const std::string& text);

struct RunOutput {
    BenchmarkReport report;
    ReturnSeries returns;
    std::map<std::string, TrainingHistory> histories;   // per trained model
    std::map<std::string, double> wall_times;           // seconds, per entry
};

RunOutput run_benchmark(const BenchConfig& config);

// report.json + summary.csv (model,rmse sorted by RMSE ascending). Wall times
// are written to timings.csv only; the other two files are seed-deterministic.
void emit_report(const RunOutput& output, const std::string& dir);

// returns.csv/.svg plus loss_<model>.csv/.svg per recorded history.
void emit_plots(const ReturnSeries& returns,
                const std::map<std::string, TrainingHistory>& histories, const std::string& dir);

// Runs the whole pipeline and writes every artifact into config.out_dir.
RunOutput run_and_emit(const BenchConfig& config);

// Fast invariant suite; prints one line per check, returns the failure count.
int run_self_check(std::ostream& out);

}  // namespace fts
