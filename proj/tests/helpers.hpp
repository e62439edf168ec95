#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "fts/date.hpp"
#include "fts/series.hpp"

namespace fts::test {

// n consecutive weekdays starting at start (start itself must be a weekday).
inline std::vector<Date> weekdays(int n, Date start = Date::from_ymd(2019, 1, 2)) {
    std::vector<Date> out;
    out.reserve(static_cast<std::size_t>(n));
    Date d = start;
    while (static_cast<int>(out.size()) < n) {
        auto wd = d.weekday();
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
        d = d.next_day();
    }
    return out;
}

inline ReturnSeries return_series(std::vector<double> values,
                                  ReturnKind kind = ReturnKind::simple) {
    ReturnSeries s;
    s.values = std::move(values);
    s.dates = weekdays(static_cast<int>(s.values.size()));
    s.kind = kind;
    return s;
}

inline ReturnSeries return_series(std::span<const double> values,
                                  ReturnKind kind = ReturnKind::simple) {
    return return_series(std::vector<double>(values.begin(), values.end()), kind);
}

// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               (tag + "-" + std::to_string(counter.fetch_add(1)) + "-" +
                std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        std::filesystem::create_directories(path);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string str(const std::string& child = "") const {
        return child.empty() ? path.string() : (path / child).string();
    }
};

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

// Message carried by the Error a callable throws; empty when none is thrown.
template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace fts::test
