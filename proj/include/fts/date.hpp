#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fts {

// Calendar date stored as days since 1970-01-01.
class Date {
public:
    Date() = default;

    static Date from_ymd(int year, unsigned month, unsigned day);
    static Date from_days(std::int32_t days) { return Date(days); }

    // Accepts "2020-12-31" and "Dec 31, 2020".
    static Date parse(std::string_view text);

    std::int32_t days_since_epoch() const { return days_; }
    std::string iso() const;
    std::chrono::weekday weekday() const;

    Date next_day() const { return Date(days_ + 1); }

    auto operator<=>(const Date&) const = default;

private:
    explicit Date(std::int32_t days) : days_(days) {}
    std::int32_t days_ = 0;
};

// RFC 3339 timestamp normalized to UTC, seconds precision.
struct Timestamp {
    std::int64_t secs = 0;  // seconds since epoch

    // "2020-03-16T14:00:00Z", optional fractional seconds (truncated),
    // "Z" or a +hh:mm / -hh:mm offset.
    static Timestamp parse(std::string_view text);

    Date utc_date() const;
    std::string rfc3339() const;

    auto operator<=>(const Timestamp&) const = default;
};

}  // namespace fts
