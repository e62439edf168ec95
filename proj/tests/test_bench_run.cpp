#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fts/bench.hpp"
#include "fts/error.hpp"
#include "fts/synth.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace fts;
using test::TempDir;
using test::read_file;
using test::thrown_message;

namespace {

// Small end-to-end setup: a 60-day synthetic fixture and a config tuned for
// test speed (tiny networks, few epochs, narrow order grid).
struct BenchSetup {
    TempDir dir{"bench"};
    BenchConfig cfg;

    BenchSetup() {
        write_fixture(gen_text_fixture(60, 11), dir.str());
        cfg.prices_path = dir.str("prices.csv");
        cfg.news_path = dir.str("news.jsonl");
        cfg.out_dir = dir.str("out");
        cfg.arima.p_max = 2;
        cfg.arima.q_max = 2;
        cfg.lstm = {.lookback = 5, .hidden1 = 6, .hidden2 = 4, .epochs = 3, .lr = 1e-3,
                    .batch_size = 0};
        cfg.text = {.d_model = 8, .n_heads = 2, .n_blocks = 1, .d_ff = 16, .max_len = 12,
                    .vocab_max = 200, .min_freq = 1, .epochs = 2, .lr = 1e-3, .mask_prob = 0.2,
                    .pretrain_epochs = 2};
    }
};

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("benchmark produces one entry per enabled model") {
    BenchSetup setup;
    RunOutput out = run_benchmark(setup.cfg);

    REQUIRE(out.report.entries.size() == 5);
    std::vector<std::string> expected{"arima", "garch", "lstm", "text_encoder",
                                      "text_encoder_adapted"};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const ModelResult& entry = out.report.entries[i];
        CHECK(entry.name == expected[i]);
        CHECK(entry.ran);
        CHECK(std::isfinite(entry.rmse));
        CHECK(entry.rmse >= 0.0);
        CHECK(!entry.summary.empty());
    }

    CHECK(out.report.n_returns == 59);
    CHECK(out.report.train_size == 44);  // floor(59 * 0.75)
    CHECK(out.report.test_size == 15);
    CHECK(out.report.train_start == out.returns.dates.front().iso());
    CHECK(out.report.test_end == out.returns.dates.back().iso());
    CHECK(out.report.train_end == out.returns.dates[43].iso());
    CHECK(out.report.test_start == out.returns.dates[44].iso());
    CHECK(out.report.config_hash == config_hash(setup.cfg));
    CHECK(out.report.seed == 42);

    CHECK(out.histories.count("lstm") == 1);
    CHECK(out.histories.count("text_encoder") == 1);
    CHECK(out.histories.count("text_encoder_adapted") == 1);
    CHECK(out.histories.at("lstm").train_loss.size() == 3);
    CHECK(out.histories.at("lstm").val_loss.size() == 3);
    CHECK(out.histories.at("text_encoder").train_loss.size() == 2);
    CHECK(out.wall_times.size() == 5);
}

TEST_CASE("text models are skipped with a notice when no news is configured") {
    BenchSetup setup;
    setup.cfg.news_path = "";
    RunOutput out = run_benchmark(setup.cfg);

    REQUIRE(out.report.entries.size() == 5);
    for (const ModelResult& entry : out.report.entries) {
        if (entry.name == "text_encoder" || entry.name == "text_encoder_adapted") {
            CHECK(!entry.ran);
            CHECK(entry.notice == "skipped: no news");
        } else {
            CHECK(entry.ran);
        }
    }
    CHECK(out.histories.count("text_encoder") == 0);
    CHECK(out.histories.count("text_encoder_adapted") == 0);
}

TEST_CASE("news dated past the final return day is dropped, not fatal") {
    BenchSetup setup;
    std::string extra = read_file(setup.dir.path / "news.jsonl");
    extra += "{\"timestamp\":\"2099-01-01T00:00:00Z\",\"source\":\"x\",\"text\":\"late\"}\n";
    test::write_file(setup.dir.path / "news.jsonl", extra);

    setup.cfg.models = {"garch", "text_encoder"};
    RunOutput out = run_benchmark(setup.cfg);
    const ModelResult& text = out.report.entries[1];
    REQUIRE(text.ran);
    CHECK(text.metrics.at("dropped_items") == 1.0);
}

TEST_CASE("same config and seed reproduce the report exactly") {
    BenchSetup setup;
    RunOutput a = run_benchmark(setup.cfg);
    RunOutput b = run_benchmark(setup.cfg);
    CHECK(a.report == b.report);
    CHECK(report_json(a.report) == report_json(b.report));
    CHECK(a.returns.values == b.returns.values);
}

TEST_CASE("disabling a model leaves the others untouched") {
    BenchSetup setup;
    RunOutput full = run_benchmark(setup.cfg);
    setup.cfg.models = {"garch", "lstm"};
    RunOutput subset = run_benchmark(setup.cfg);

    REQUIRE(subset.report.entries.size() == 2);
    CHECK(subset.report.entries[0] == full.report.entries[1]);  // garch
    CHECK(subset.report.entries[1] == full.report.entries[2]);  // lstm
}

TEST_CASE("entries follow the configured model order") {
    BenchSetup setup;
    setup.cfg.models = {"lstm", "arima"};
    RunOutput out = run_benchmark(setup.cfg);
    REQUIRE(out.report.entries.size() == 2);
    CHECK(out.report.entries[0].name == "lstm");
    CHECK(out.report.entries[1].name == "arima");
}

TEST_CASE("report json round-trips") {
    BenchSetup setup;
    setup.cfg.news_path = "";  // mix of ran and skipped entries
    RunOutput out = run_benchmark(setup.cfg);
    BenchmarkReport parsed = report_from_json(report_json(out.report));
    CHECK(parsed == out.report);
}

TEST_CASE("summary orders models by rmse and matches the report numbers") {
    BenchSetup setup;
    RunOutput out = run_benchmark(setup.cfg);
    emit_report(out, setup.cfg.out_dir);

    std::string report_text = read_file(std::filesystem::path(setup.cfg.out_dir) / "report.json");
    std::vector<std::string> lines =
        csv_lines(read_file(std::filesystem::path(setup.cfg.out_dir) / "summary.csv"));
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "model,rmse");
    double prev = -1.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::size_t comma = lines[i].find(',');
        std::string value = lines[i].substr(comma + 1);
        double rmse = std::stod(value);
        CHECK(rmse >= prev);
        prev = rmse;
        CHECK(report_text.find("\"rmse\": " + value) != std::string::npos);
    }

    std::vector<std::string> timing_lines =
        csv_lines(read_file(std::filesystem::path(setup.cfg.out_dir) / "timings.csv"));
    REQUIRE(timing_lines.size() == 6);
    CHECK(timing_lines[0] == "model,wall_time_s");
}

TEST_CASE("skipped models land at the bottom of the summary with no number") {
    BenchSetup setup;
    setup.cfg.news_path = "";
    RunOutput out = run_benchmark(setup.cfg);
    emit_report(out, setup.cfg.out_dir);
    std::vector<std::string> lines =
        csv_lines(read_file(std::filesystem::path(setup.cfg.out_dir) / "summary.csv"));
    REQUIRE(lines.size() == 6);
    CHECK(lines[4] == "text_encoder,");
    CHECK(lines[5] == "text_encoder_adapted,");
}

TEST_CASE("plot files match the recorded histories") {
    BenchSetup setup;
    RunOutput out = run_benchmark(setup.cfg);
    emit_plots(out.returns, out.histories, setup.cfg.out_dir);
    std::filesystem::path dir(setup.cfg.out_dir);

    std::vector<std::string> returns_lines = csv_lines(read_file(dir / "returns.csv"));
    CHECK(returns_lines.size() == out.returns.size() + 1);
    CHECK(returns_lines[0] == "date,return");
    CHECK(returns_lines[1].substr(0, 10) == out.returns.dates[0].iso());

    std::vector<std::string> loss_lines = csv_lines(read_file(dir / "loss_lstm.csv"));
    REQUIRE(loss_lines.size() == 4);  // header + 3 epochs
    CHECK(loss_lines[0] == "epoch,train_loss,val_loss");
    CHECK(loss_lines[1].substr(0, 2) == "1,");

    std::string loss_svg = read_file(dir / "loss_lstm.svg");
    std::size_t count = 0;
    for (std::size_t pos = loss_svg.find("<polyline"); pos != std::string::npos;
         pos = loss_svg.find("<polyline", pos + 1))
        ++count;
    CHECK(count == 2);

    std::string returns_svg = read_file(dir / "returns.svg");
    count = 0;
    for (std::size_t pos = returns_svg.find("<polyline"); pos != std::string::npos;
         pos = returns_svg.find("<polyline", pos + 1))
        ++count;
    CHECK(count == 1);

    CHECK(std::filesystem::exists(dir / "loss_text_encoder.csv"));
    CHECK(std::filesystem::exists(dir / "loss_text_encoder_adapted.svg"));
}

TEST_CASE("empty plot inputs are rejected") {
    BenchSetup setup;
    RunOutput out = run_benchmark(setup.cfg);
    std::map<std::string, TrainingHistory> bad{{"lstm", TrainingHistory{}}};
    CHECK_THROWS_AS(emit_plots(out.returns, bad, setup.dir.str("plots")), Error);
    CHECK_THROWS_AS(emit_plots(ReturnSeries{}, {}, setup.dir.str("plots")), Error);
}

TEST_CASE("run_and_emit writes the full artifact set") {
    BenchSetup setup;
    run_and_emit(setup.cfg);
    std::filesystem::path dir(setup.cfg.out_dir);
    for (const char* name :
         {"report.json", "summary.csv", "timings.csv", "config.json", "returns.csv",
          "returns.svg", "loss_lstm.csv", "loss_lstm.svg", "loss_text_encoder.csv",
          "loss_text_encoder.svg", "loss_text_encoder_adapted.csv",
          "loss_text_encoder_adapted.svg"})
        CHECK(std::filesystem::exists(dir / name));
}

TEST_CASE("benchmark validates its configuration") {
    BenchSetup setup;

    SUBCASE("train fraction bounds") {
        setup.cfg.train_fraction = 0.0;
        CHECK_THROWS_AS(run_benchmark(setup.cfg), Error);
        setup.cfg.train_fraction = 1.0;
        CHECK_THROWS_AS(run_benchmark(setup.cfg), Error);
    }
    SUBCASE("no models enabled") {
        setup.cfg.models = {};
        CHECK(thrown_message([&] { run_benchmark(setup.cfg); }).find("no models") !=
              std::string::npos);
    }
    SUBCASE("unknown model name") {
        setup.cfg.models = {"prophet"};
        CHECK_THROWS_AS(run_benchmark(setup.cfg), Error);
    }
    SUBCASE("missing price path") {
        setup.cfg.prices_path = "";
        CHECK_THROWS_AS(run_benchmark(setup.cfg), Error);
    }
}

TEST_CASE("a model whose preconditions fail is recorded, not fatal") {
    BenchSetup setup;
    setup.cfg.models = {"garch", "lstm"};
    setup.cfg.lstm.lookback = 50;  // exceeds the 44-point train span
    RunOutput out = run_benchmark(setup.cfg);
    CHECK(out.report.entries[0].ran);
    CHECK(!out.report.entries[1].ran);
    CHECK(out.report.entries[1].notice.substr(0, 7) == "failed:");
    CHECK(out.report.entries[1].notice.find("lookback") != std::string::npos);
}

TEST_CASE("a run where every model fails is an error") {
    TempDir dir("tiny");
    test::write_file(dir.path / "p.csv", "date,close\n2021-01-04,10\n2021-01-05,11\n2021-01-06,12\n");
    BenchConfig cfg;
    cfg.prices_path = dir.str("p.csv");
    cfg.models = {"lstm"};
    CHECK(thrown_message([&] { run_benchmark(cfg); }).find("no model produced a result") !=
          std::string::npos);
}

TEST_CASE("self check passes") {
    std::ostringstream out;
    CHECK(run_self_check(out) == 0);
    CHECK(out.str().find("ok   - ") != std::string::npos);
    CHECK(out.str().find("FAIL") == std::string::npos);
}
