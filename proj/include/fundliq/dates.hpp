#pragma once

#include <string>

namespace fundliq {

// Calendar days are serial day numbers (days since 1970-01-01), months are
// serial month indices (year*12 + month-1). Both are plain ints so they can
// be compared, subtracted, and used as map keys without a wrapper type.

struct CivilDate {
    int year;
    int month;  // 1..12
    int day;    // 1..31
};

int days_from_civil(int year, int month, int day);
CivilDate civil_from_days(int serial);

// 0 = Sunday .. 6 = Saturday.
int weekday(int serial_day);
inline bool is_weekday(int serial_day) {
    int w = weekday(serial_day);
    return w >= 1 && w <= 5;
}

// "yyyy-mm-dd" <-> serial day. Throws std::invalid_argument on bad input.
int parse_date(const std::string& text);
std::string format_date(int serial_day);

// "yyyy-mm" <-> serial month index. Throws std::invalid_argument on bad input.
int parse_month(const std::string& text);
std::string format_month(int month_index);

inline int month_of_day(int serial_day) {
    CivilDate c = civil_from_days(serial_day);
    return c.year * 12 + (c.month - 1);
}

}  // namespace fundliq
