#include "ftsbench.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include "fts/bench.hpp"
#include "fts/error.hpp"
#include "fts/synth.hpp"

struct ftsb_config {
    fts::BenchConfig cfg;
};

struct ftsb_report {
    fts::RunOutput output;
};

namespace {

thread_local std::string g_last_error;
thread_local ftsb_status g_last_status = FTSB_OK;

ftsb_status status_of(fts::errc code) {
    switch (code) {
        case fts::errc::invalid_argument: return FTSB_ERR_INVALID_ARGUMENT;
        case fts::errc::parse: return FTSB_ERR_PARSE;
        case fts::errc::io: return FTSB_ERR_IO;
        case fts::errc::numeric: return FTSB_ERR_NUMERIC;
        case fts::errc::internal: return FTSB_ERR_INTERNAL;
    }
    return FTSB_ERR_INTERNAL;
}

ftsb_status record_error(const std::exception& e, ftsb_status status) {
    g_last_error = e.what();
    g_last_status = status;
    return status;
}

template <typename Fn>
ftsb_status guarded(Fn&& fn) {
    try {
        fn();
        return FTSB_OK;
    } catch (const fts::Error& e) {
        return record_error(e, status_of(e.code()));
    } catch (const std::exception& e) {
        return record_error(e, FTSB_ERR_INTERNAL);
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bool arg_error(const char* message) {
    g_last_error = message;
    g_last_status = FTSB_ERR_INVALID_ARGUMENT;
    return false;
}

const fts::ModelResult* entry_at(const ftsb_report* report, int index) {
    if (!report) {
        arg_error("report is NULL");
        return nullptr;
    }
    const auto& entries = report->output.report.entries;
    if (index < 0 || index >= static_cast<int>(entries.size())) {
        arg_error("entry index out of range");
        return nullptr;
    }
    return &entries[static_cast<std::size_t>(index)];
}

}  // namespace

extern "C" {

const char* ftsb_version(void) { return "0.1.0"; }

const char* ftsb_status_name(ftsb_status status) {
    switch (status) {
        case FTSB_OK: return "ok";
        case FTSB_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case FTSB_ERR_PARSE: return "parse";
        case FTSB_ERR_IO: return "io";
        case FTSB_ERR_NUMERIC: return "numeric";
        case FTSB_ERR_INTERNAL: return "internal";
    }
    return "internal";
}

const char* ftsb_last_error(void) { return g_last_error.c_str(); }

ftsb_status ftsb_last_status(void) { return g_last_status; }

void ftsb_string_free(char* s) { std::free(s); }

ftsb_config* ftsb_config_default(void) { return new ftsb_config{}; }

ftsb_config* ftsb_config_load(const char* path) {
    if (!path) {
        arg_error("path is NULL");
        return nullptr;
    }
    ftsb_config* config = nullptr;
    ftsb_status status =
        guarded([&] { config = new ftsb_config{fts::load_config(path)}; });
    return status == FTSB_OK ? config : nullptr;
}

ftsb_config* ftsb_config_from_json(const char* json_text) {
    if (!json_text) {
        arg_error("json_text is NULL");
        return nullptr;
    }
    ftsb_config* config = nullptr;
    ftsb_status status =
        guarded([&] { config = new ftsb_config{fts::config_from_json_text(json_text)}; });
    return status == FTSB_OK ? config : nullptr;
}

ftsb_status ftsb_config_set(ftsb_config* config, const char* key, const char* value) {
    if (!config || !key || !value) {
        arg_error("config, key, and value must be non-NULL");
        return FTSB_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] { fts::apply_override(config->cfg, key, value); });
}

char* ftsb_config_json(const ftsb_config* config) {
    if (!config) {
        arg_error("config is NULL");
        return nullptr;
    }
    return dup_string(fts::config_json(config->cfg));
}

void ftsb_config_free(ftsb_config* config) { delete config; }

ftsb_status ftsb_run(const ftsb_config* config, int emit_artifacts, ftsb_report** out_report) {
    if (!config || !out_report) {
        arg_error("config and out_report must be non-NULL");
        return FTSB_ERR_INVALID_ARGUMENT;
    }
    *out_report = nullptr;
    return guarded([&] {
        fts::RunOutput output = emit_artifacts ? fts::run_and_emit(config->cfg)
                                               : fts::run_benchmark(config->cfg);
        *out_report = new ftsb_report{std::move(output)};
    });
}

char* ftsb_report_to_json(const ftsb_report* report) {
    if (!report) {
        arg_error("report is NULL");
        return nullptr;
    }
    return dup_string(fts::report_json(report->output.report));
}

int ftsb_report_entry_count(const ftsb_report* report) {
    if (!report) return 0;
    return static_cast<int>(report->output.report.entries.size());
}

const char* ftsb_report_entry_name(const ftsb_report* report, int index) {
    const fts::ModelResult* entry = entry_at(report, index);
    return entry ? entry->name.c_str() : nullptr;
}

const char* ftsb_report_entry_summary(const ftsb_report* report, int index) {
    const fts::ModelResult* entry = entry_at(report, index);
    return entry ? entry->summary.c_str() : nullptr;
}

const char* ftsb_report_entry_notice(const ftsb_report* report, int index) {
    const fts::ModelResult* entry = entry_at(report, index);
    return entry ? entry->notice.c_str() : nullptr;
}

int ftsb_report_entry_rmse(const ftsb_report* report, int index, double* out_rmse) {
    const fts::ModelResult* entry = entry_at(report, index);
    if (!entry || !entry->ran) return 0;
    if (out_rmse) *out_rmse = entry->rmse;
    return 1;
}

void ftsb_report_free(ftsb_report* report) { delete report; }

ftsb_status ftsb_gen_fixture(int n_days, uint64_t seed, const char* dir) {
    if (!dir) {
        arg_error("dir is NULL");
        return FTSB_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        fts::TextFixture fixture = fts::gen_text_fixture(n_days, seed);
        fts::write_fixture(fixture, dir);
    });
}

int ftsb_self_check(void) { return fts::run_self_check(std::cout); }

}  // extern "C"
