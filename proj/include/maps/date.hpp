#pragma once

#include <chrono>
#include <compare>
#include <stdexcept>
#include <string>

namespace maps {

// Calendar date, stored as days since the civil epoch. Comparable, hashable
// enough for our needs, parses/prints ISO-8601 (YYYY-MM-DD).
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days d) : days_(d) {}

    static Date parse(const std::string& iso);

    std::string to_string() const;

    Date next() const { return Date(days_ + std::chrono::days{1}); }

    auto operator<=>(const Date&) const = default;

    std::chrono::sys_days raw() const { return days_; }

private:
    std::chrono::sys_days days_{};
};

struct DateRange {
    Date begin;  // inclusive
    Date end;    // inclusive

    bool contains(const Date& d) const { return begin <= d && d <= end; }
    bool overlaps(const DateRange& o) const {
        return !(end < o.begin || o.end < begin);
    }
};

}  // namespace maps
