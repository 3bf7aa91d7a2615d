#include "fundliq/dates.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace fundliq {

// Civil-calendar conversion via era decomposition (Howard Hinnant's algorithm).
int days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

CivilDate civil_from_days(int z) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

int weekday(int serial_day) {
    // 1970-01-01 was a Thursday.
    int w = (serial_day + 4) % 7;
    return w < 0 ? w + 7 : w;
}

namespace {

int parse_int_field(const std::string& text, size_t begin, size_t len) {
    int value = 0;
    const char* first = text.data() + begin;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw std::invalid_argument("bad date field in '" + text + "'");
    return value;
}

}  // namespace

int parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("expected yyyy-mm-dd, got '" + text + "'");
    int y = parse_int_field(text, 0, 4);
    int m = parse_int_field(text, 5, 2);
    int d = parse_int_field(text, 8, 2);
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw std::invalid_argument("date out of range: '" + text + "'");
    int serial = days_from_civil(y, m, d);
    CivilDate back = civil_from_days(serial);
    if (back.year != y || back.month != m || back.day != d)
        throw std::invalid_argument("invalid calendar day: '" + text + "'");
    return serial;
}

std::string format_date(int serial_day) {
    CivilDate c = civil_from_days(serial_day);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

int parse_month(const std::string& text) {
    if (text.size() != 7 || text[4] != '-')
        throw std::invalid_argument("expected yyyy-mm, got '" + text + "'");
    int y = parse_int_field(text, 0, 4);
    int m = parse_int_field(text, 5, 2);
    if (m < 1 || m > 12)
        throw std::invalid_argument("month out of range: '" + text + "'");
    return y * 12 + (m - 1);
}

std::string format_month(int month_index) {
    int y = month_index / 12;
    int m = month_index % 12;
    if (m < 0) {
        m += 12;
        y -= 1;
    }
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", y, m + 1);
    return buf;
}

}  // namespace fundliq
