#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "brt/errors.hpp"

namespace brt {

// Calendar day stored as days since 1970-01-01. Parsing/formatting is
// ISO-8601 (YYYY-MM-DD) only, which is what the CSV interfaces use.
class Date {
public:
    Date() = default;
    explicit Date(int serial_day) : serial_(serial_day) {}

    static Date from_ymd(int y, unsigned m, unsigned d) {
        std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
        if (!ymd.ok()) {
            throw ConfigError("invalid calendar date " + std::to_string(y) + "-" +
                              std::to_string(m) + "-" + std::to_string(d));
        }
        return Date(static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count()));
    }

    static Date parse(const std::string& iso) {
        int y = 0;
        unsigned m = 0, d = 0;
        char sep1 = 0, sep2 = 0;
        if (std::sscanf(iso.c_str(), "%d%c%u%c%u", &y, &sep1, &m, &sep2, &d) != 5 ||
            sep1 != '-' || sep2 != '-') {
            throw ConfigError("unparseable ISO-8601 date: '" + iso + "'");
        }
        return from_ymd(y, m, d);
    }

    std::string iso() const {
        std::chrono::year_month_day ymd{
            std::chrono::sys_days{std::chrono::days{serial_}}};
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    int serial() const { return serial_; }
    bool is_weekday() const {
        std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{serial_}}};
        return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
    }

    Date next_weekday() const {
        Date d{serial_ + 1};
        while (!d.is_weekday()) d = Date{d.serial_ + 1};
        return d;
    }

    // n-th weekday on or after this one (n = 0 returns the first weekday >= this).
    Date next_weekday_n(int n) const {
        Date d = is_weekday() ? *this : next_weekday();
        for (int k = 0; k < n; ++k) d = d.next_weekday();
        return d;
    }

    auto operator<=>(const Date&) const = default;

private:
    int serial_ = 0;
};

} // namespace brt
