#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftsbench.h"
#include "json.hpp"

namespace {

using nlohmann::json;

// All failures land on stderr as one JSON object so callers can parse them.
int emit_error(ftsb_status status, const std::string& message) {
    json err;
    err["error"] = {{"status", ftsb_status_name(status)}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return 1;
}

int emit_last_error() { return emit_error(ftsb_last_status(), ftsb_last_error()); }

struct ConfigHandle {
    ftsb_config* ptr = nullptr;
    ~ConfigHandle() { ftsb_config_free(ptr); }
};

struct ReportHandle {
    ftsb_report* ptr = nullptr;
    ~ReportHandle() { ftsb_report_free(ptr); }
};

int cmd_run(const std::string& config_path,
            const std::vector<std::pair<std::string, std::string>>& overrides) {
    ConfigHandle config;
    config.ptr = ftsb_config_load(config_path.c_str());
    if (!config.ptr) return emit_last_error();

    for (const auto& [key, value] : overrides) {
        ftsb_status status = ftsb_config_set(config.ptr, key.c_str(), value.c_str());
        if (status != FTSB_OK) return emit_last_error();
    }

    ReportHandle report;
    ftsb_status status = ftsb_run(config.ptr, 1, &report.ptr);
    if (status != FTSB_OK) return emit_last_error();

    int count = ftsb_report_entry_count(report.ptr);
    for (int i = 0; i < count; ++i) {
        double rmse = 0.0;
        std::cout << ftsb_report_entry_name(report.ptr, i) << ": ";
        if (ftsb_report_entry_rmse(report.ptr, i, &rmse)) {
            std::cout << "rmse " << json(rmse).dump() << "  ("
                      << ftsb_report_entry_summary(report.ptr, i) << ")";
        } else {
            std::cout << ftsb_report_entry_notice(report.ptr, i);
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_gen_fixture(int days, std::uint64_t seed, const std::string& out_dir) {
    ftsb_status status = ftsb_gen_fixture(days, seed, out_dir.c_str());
    if (status != FTSB_OK) return emit_last_error();
    std::cout << "fixture written to " << out_dir << "\n";
    return 0;
}

int cmd_check() {
    int failures = ftsb_self_check();
    if (failures > 0)
        return emit_error(FTSB_ERR_INTERNAL, std::to_string(failures) + " self-checks failed");
    std::cout << "all checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Return-forecasting benchmark"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the benchmark described by a config file");
    std::string config_path;
    run->add_option("--config", config_path, "JSON config file")->required();
    std::string prices, news, out_dir, models;
    std::uint64_t seed = 0;
    auto* opt_prices = run->add_option("--prices", prices, "Price CSV (overrides config)");
    auto* opt_news = run->add_option("--news", news, "News JSONL (overrides config)");
    auto* opt_out = run->add_option("--out", out_dir, "Output directory (overrides config)");
    auto* opt_seed = run->add_option("--seed", seed, "Global seed (overrides config)");
    auto* opt_models =
        run->add_option("--models", models, "Comma-separated model list (overrides config)");

    auto* gen = app.add_subcommand("gen-fixture", "Write a synthetic price and news fixture");
    int days = 500;
    std::uint64_t gen_seed = 42;
    std::string gen_out = "fixture";
    gen->add_option("--days", days, "Trading days to generate");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output directory");

    auto* check = app.add_subcommand("check", "Run the invariant self-test suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return emit_error(FTSB_ERR_INVALID_ARGUMENT, e.what());
    }

    if (run->parsed()) {
        std::vector<std::pair<std::string, std::string>> overrides;
        if (*opt_prices) overrides.emplace_back("prices", prices);
        if (*opt_news) overrides.emplace_back("news", news);
        if (*opt_out) overrides.emplace_back("out", out_dir);
        if (*opt_seed) overrides.emplace_back("seed", std::to_string(seed));
        if (*opt_models) overrides.emplace_back("models", models);
        return cmd_run(config_path, overrides);
    }
    if (gen->parsed()) return cmd_gen_fixture(days, gen_seed, gen_out);
    if (check->parsed()) return cmd_check();
    return emit_error(FTSB_ERR_INVALID_ARGUMENT, "no subcommand given");
}
