#include "stgt/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "stgt/csv.hpp"
#include "stgt/error.hpp"
#include "stgt/log.hpp"

namespace stgt {

long DailySeries::total() const {
    long t = 0;
    for (int c : counts) t += c;
    return t;
}

std::vector<EventRecord> read_events_csv(const std::filesystem::path& path,
                                         const DateRange& period, IngestReport& report) {
    csv::Table table = csv::read_file(path);
    int id_col = table.column("substation_id");
    int ts_col = table.column("timestamp");
    if (ts_col < 0) ts_col = table.column("timestamp_iso8601");
    if (id_col < 0 || ts_col < 0)
        throw IoError(path.string() + ": missing substation_id/timestamp column");
    int cause_col = table.column("cause");
    int equip_col = table.column("equipment");

    std::vector<EventRecord> events;
    events.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (static_cast<int>(row.size()) <= std::max(id_col, ts_col) || row[id_col].empty()) {
            ++report.rejected_malformed;
            continue;
        }
        auto day = parse_timestamp_utc(row[ts_col]);
        if (!day) {
            ++report.rejected_malformed;
            continue;
        }
        if (!period.contains(*day)) {
            ++report.rejected_out_of_period;
            continue;
        }
        EventRecord e;
        e.substation_id = row[id_col];
        e.day = *day;
        if (cause_col >= 0 && cause_col < static_cast<int>(row.size())) e.cause = row[cause_col];
        if (equip_col >= 0 && equip_col < static_cast<int>(row.size())) e.equipment = row[equip_col];
        events.push_back(std::move(e));
        ++report.accepted;
    }
    if (report.rejected_malformed > 0)
        log::warn(path.string() + ": rejected " + std::to_string(report.rejected_malformed) +
                  " malformed rows");
    return events;
}

std::vector<DailySeries> aggregate_daily(const std::vector<EventRecord>& events,
                                         const DateRange& period) {
    if (period.last < period.first) throw ContractError("aggregate_daily: empty period");
    std::map<std::string, std::map<Date, int>> by_sub;
    for (const auto& e : events) {
        if (!period.contains(e.day)) continue;
        ++by_sub[e.substation_id][e.day];
    }
    std::vector<DailySeries> out;
    out.reserve(by_sub.size());
    for (auto& [id, days] : by_sub) {
        DailySeries s;
        s.substation_id = id;
        s.start_date = days.begin()->first;
        const Date last = days.rbegin()->first;
        s.counts.assign(static_cast<std::size_t>((last - s.start_date).count()) + 1, 0);
        for (const auto& [d, c] : days)
            s.counts[static_cast<std::size_t>((d - s.start_date).count())] = c;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DailySeries> filter_substations(std::vector<DailySeries> series, long min_days,
                                            long min_total) {
    std::erase_if(series, [&](const DailySeries& s) {
        return static_cast<long>(s.days()) < min_days || s.total() < min_total;
    });
    return series;
}

void write_series_csv(const std::vector<DailySeries>& series, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"substation_id", "date", "count"});
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.counts.size(); ++i)
            w.row({s.substation_id, to_string(s.date_at(i)), std::to_string(s.counts[i])});
    w.close();
}

std::vector<DailySeries> read_series_csv(const std::filesystem::path& path) {
    csv::Table table = csv::read_file(path);
    int id_col = table.column("substation_id");
    int date_col = table.column("date");
    int count_col = table.column("count");
    if (id_col < 0 || date_col < 0 || count_col < 0)
        throw IoError(path.string() + ": missing substation_id/date/count column");

    std::map<std::string, std::map<Date, int>> by_sub;
    for (const auto& row : table.rows) {
        auto d = parse_date(row[date_col]);
        if (!d) throw IoError(path.string() + ": bad date " + row[date_col]);
        int c = 0;
        auto [p, ec] = std::from_chars(row[count_col].data(),
                                       row[count_col].data() + row[count_col].size(), c);
        if (ec != std::errc() || c < 0)
            throw IoError(path.string() + ": bad count " + row[count_col]);
        by_sub[row[id_col]][*d] = c;
    }
    std::vector<DailySeries> out;
    for (auto& [id, days] : by_sub) {
        DailySeries s;
        s.substation_id = id;
        s.start_date = days.begin()->first;
        const Date last = days.rbegin()->first;
        s.counts.assign(static_cast<std::size_t>((last - s.start_date).count()) + 1, 0);
        for (const auto& [d, c] : days)
            s.counts[static_cast<std::size_t>((d - s.start_date).count())] = c;
        out.push_back(std::move(s));
    }
    return out;
}

void write_disturbance_counts_csv(const std::vector<DailySeries>& series,
                                  const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"substation_id", "total_count"});
    for (const auto& s : series) w.row({s.substation_id, std::to_string(s.total())});
    w.close();
}

std::vector<Sample> make_windows(const DailySeries& series, std::size_t substation_index,
                                 std::size_t lookback) {
    std::vector<Sample> samples;
    if (lookback == 0) throw ContractError("make_windows: lookback must be positive");
    if (series.days() < lookback + 1) return samples; // too short, not an error
    // day t ranges over [L-1, len-2]: full window behind, label day ahead
    for (std::size_t t = lookback - 1; t + 1 < series.days(); ++t) {
        Sample s;
        s.substation = substation_index;
        s.window_end = series.date_at(t);
        s.label_date = series.date_at(t + 1);
        s.window.resize(lookback);
        for (std::size_t k = 0; k < lookback; ++k)
            s.window[k] = static_cast<double>(series.counts[t - lookback + 1 + k]);
        s.label = series.counts[t + 1] > 0 ? 1 : 0;
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace stgt
