#include "maps/date.hpp"

#include <cstdio>

namespace maps {

Date Date::parse(const std::string& iso) {
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3) {
        throw std::invalid_argument("bad date '" + iso + "', expected YYYY-MM-DD");
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date '" + iso + "'");
    }
    return Date(std::chrono::sys_days{ymd});
}

std::string Date::to_string() const {
    std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

}  // namespace maps
