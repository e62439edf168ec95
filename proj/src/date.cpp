#include "fts/date.hpp"

#include <array>
#include <cctype>
#include <charconv>

#include "fts/error.hpp"

namespace fts {
namespace {

namespace chr = std::chrono;

const std::array<std::string_view, 12> kMonthNames = {
    "jan", "feb", "mar", "apr", "may", "jun",
    "jul", "aug", "sep", "oct", "nov", "dec"};

int parse_int(std::string_view s, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(errc::parse, std::string("invalid ") + what + ": '" + std::string(s) + "'");
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok())
        fail(errc::parse, "invalid calendar date: " + std::to_string(year) + "-" +
                              std::to_string(month) + "-" + std::to_string(day));
    return Date(static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count()));
}

Date Date::parse(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) fail(errc::parse, "empty date field");

    // ISO: YYYY-MM-DD
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        int y = parse_int(s.substr(0, 4), "year");
        int m = parse_int(s.substr(5, 2), "month");
        int d = parse_int(s.substr(8, 2), "day");
        return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    }

    // "Mon DD, YYYY"
    auto comma = s.find(',');
    auto space = s.find(' ');
    if (comma != std::string_view::npos && space != std::string_view::npos && space < comma) {
        std::string mon(s.substr(0, space));
        for (char& c : mon) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        int month = 0;
        for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
            if (mon == kMonthNames[i]) { month = static_cast<int>(i) + 1; break; }
        }
        if (month == 0) fail(errc::parse, "unknown month name in date: '" + std::string(text) + "'");
        int d = parse_int(trim(s.substr(space + 1, comma - space - 1)), "day");
        int y = parse_int(trim(s.substr(comma + 1)), "year");
        return from_ymd(y, static_cast<unsigned>(month), static_cast<unsigned>(d));
    }

    fail(errc::parse, "unrecognized date format: '" + std::string(text) + "'");
}

std::string Date::iso() const {
    chr::year_month_day ymd{chr::sys_days{chr::days{days_}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::chrono::weekday Date::weekday() const {
    return chr::weekday{chr::sys_days{chr::days{days_}}};
}

Timestamp Timestamp::parse(std::string_view text) {
    std::string_view s = trim(text);
    // minimal shape: YYYY-MM-DDThh:mm:ss...
    if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') ||
        s[13] != ':' || s[16] != ':')
        fail(errc::parse, "invalid RFC 3339 timestamp: '" + std::string(text) + "'");

    int y = parse_int(s.substr(0, 4), "year");
    int mo = parse_int(s.substr(5, 2), "month");
    int d = parse_int(s.substr(8, 2), "day");
    int h = parse_int(s.substr(11, 2), "hour");
    int mi = parse_int(s.substr(14, 2), "minute");
    int se = parse_int(s.substr(17, 2), "second");
    if (h > 23 || mi > 59 || se > 60)
        fail(errc::parse, "time of day out of range: '" + std::string(text) + "'");
    if (se == 60) se = 59;  // fold leap seconds

    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    if (pos >= s.size())
        fail(errc::parse, "timestamp missing UTC offset: '" + std::string(text) + "'");

    std::int64_t offset = 0;
    if (s[pos] == 'Z' || s[pos] == 'z') {
        if (pos + 1 != s.size())
            fail(errc::parse, "trailing characters in timestamp: '" + std::string(text) + "'");
    } else if (s[pos] == '+' || s[pos] == '-') {
        std::string_view off = s.substr(pos);
        if (off.size() != 6 || off[3] != ':')
            fail(errc::parse, "invalid UTC offset in timestamp: '" + std::string(text) + "'");
        int oh = parse_int(off.substr(1, 2), "offset hour");
        int om = parse_int(off.substr(4, 2), "offset minute");
        offset = (std::int64_t{oh} * 60 + om) * 60;
        if (off[0] == '-') offset = -offset;
    } else {
        fail(errc::parse, "invalid UTC offset in timestamp: '" + std::string(text) + "'");
    }

    Date day = Date::from_ymd(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    std::int64_t local = std::int64_t{day.days_since_epoch()} * 86400 + h * 3600 + mi * 60 + se;
    return Timestamp{local - offset};
}

Date Timestamp::utc_date() const {
    std::int64_t days = secs / 86400;
    if (secs < 0 && secs % 86400 != 0) --days;
    return Date::from_days(static_cast<std::int32_t>(days));
}

std::string Timestamp::rfc3339() const {
    Date day = utc_date();
    std::int64_t rem = secs - std::int64_t{day.days_since_epoch()} * 86400;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", day.iso().c_str(),
                  static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

const char* errc_name(errc code) {
    switch (code) {
        case errc::invalid_argument: return "invalid_argument";
        case errc::parse: return "parse";
        case errc::io: return "io";
        case errc::numeric: return "numeric";
        case errc::internal: return "internal";
    }
    return "unknown";
}

}  // namespace fts
