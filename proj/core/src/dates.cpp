#include "stgt/dates.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace stgt {

namespace {

bool parse_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && ptr == s.data() + pos + len;
}

} // namespace

Date make_date(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    return sys_days{year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                   std::chrono::day{day}}};
}

std::optional<Date> parse_date(std::string_view s) {
    using namespace std::chrono;
    int y, m, d;
    if (s.size() < 10) return std::nullopt;
    if (s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!parse_int(s, 0, 4, y) || !parse_int(s, 5, 2, m) || !parse_int(s, 8, 2, d))
        return std::nullopt;
    year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                       std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::optional<Date> parse_timestamp_utc(std::string_view s) {
    if (s.size() < 10) return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    if (!date) return std::nullopt;
    if (s.size() == 10) return date;

    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    std::string_view rest = s.substr(11);

    int hh = 0, mm = 0;
    if (!parse_int(rest, 0, 2, hh)) return std::nullopt;
    if (rest.size() < 5 || rest[2] != ':' || !parse_int(rest, 3, 2, mm)) return std::nullopt;
    if (hh > 23 || mm > 59) return std::nullopt;
    std::size_t pos = 5;
    int ss = 0;
    if (pos < rest.size() && rest[pos] == ':') {
        if (!parse_int(rest, pos + 1, 2, ss) || ss > 60) return std::nullopt;
        pos += 3;
        // fractional seconds are irrelevant at day granularity
        if (pos < rest.size() && rest[pos] == '.') {
            ++pos;
            while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) ++pos;
        }
    }

    long offset_min = 0; // minutes east of UTC
    if (pos < rest.size()) {
        char c = rest[pos];
        if (c == 'Z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int oh = 0, om = 0;
            if (!parse_int(rest, pos + 1, 2, oh)) return std::nullopt;
            std::size_t opos = pos + 3;
            if (opos < rest.size() && rest[opos] == ':') ++opos;
            if (opos + 2 <= rest.size()) {
                if (!parse_int(rest, opos, 2, om)) return std::nullopt;
                opos += 2;
            }
            offset_min = (c == '+' ? 1 : -1) * (oh * 60L + om);
            pos = opos;
        }
        if (pos != rest.size()) return std::nullopt;
    }

    using namespace std::chrono;
    auto tp = *date + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_min};
    return floor<days>(tp);
}

std::string to_string(Date d) {
    using namespace std::chrono;
    year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int year_of(Date d) {
    return static_cast<int>(std::chrono::year_month_day{d}.year());
}

unsigned month_of(Date d) {
    return static_cast<unsigned>(std::chrono::year_month_day{d}.month());
}

unsigned day_of_month(Date d) {
    return static_cast<unsigned>(std::chrono::year_month_day{d}.day());
}

unsigned day_of_year(Date d) {
    int y = year_of(d);
    return static_cast<unsigned>((d - make_date(y, 1, 1)).count()) + 1;
}

unsigned weekday_of(Date d) {
    return std::chrono::weekday{d}.c_encoding();
}

bool is_weekend(Date d) {
    unsigned w = weekday_of(d);
    return w == 0 || w == 6;
}

} // namespace stgt
