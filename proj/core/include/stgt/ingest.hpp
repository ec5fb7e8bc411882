#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stgt/dates.hpp"

namespace stgt {

struct EventRecord {
    std::string substation_id;
    Date day; // timestamp normalized to a UTC calendar day
    std::string cause;     // optional pass-through, unused by the models
    std::string equipment; // optional pass-through
};

/// Gap-free daily failure counts for one substation.
struct DailySeries {
    std::string substation_id;
    Date start_date{};
    std::vector<int> counts; // one entry per calendar day, >= 0

    std::size_t days() const { return counts.size(); }
    Date date_at(std::size_t i) const { return start_date + std::chrono::days(static_cast<int>(i)); }
    long total() const;
};

struct DateRange {
    Date first{};
    Date last{}; // inclusive
    bool contains(Date d) const { return d >= first && d <= last; }
    long days() const { return (last - first).count() + 1; }
};

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected_malformed = 0;
    std::size_t rejected_out_of_period = 0;
};

/// Parses `substation_id,timestamp_iso8601[,cause,equipment]` rows. Malformed
/// rows and rows outside `period` are dropped and counted in the report.
std::vector<EventRecord> read_events_csv(const std::filesystem::path& path,
                                         const DateRange& period, IngestReport& report);

/// Consolidates events into per-substation gap-free daily series. Each series
/// spans that substation's first-to-last event day; unobserved days are zero.
/// Output is sorted by substation id and independent of event order.
std::vector<DailySeries> aggregate_daily(const std::vector<EventRecord>& events,
                                         const DateRange& period);

/// Retains series with at least `min_days` observation days AND at least
/// `min_total` total incidents (both bounds inclusive).
std::vector<DailySeries> filter_substations(std::vector<DailySeries> series, long min_days = 180,
                                            long min_total = 100);

void write_series_csv(const std::vector<DailySeries>& series, const std::filesystem::path& path);
std::vector<DailySeries> read_series_csv(const std::filesystem::path& path);

/// `substation_id,total_count` per substation (raw disturbance counts).
void write_disturbance_counts_csv(const std::vector<DailySeries>& series,
                                  const std::filesystem::path& path);

/// One prediction instance: the raw count window ending at day t plus the
/// next-day label. Indices refer to positions in the owning series.
struct Sample {
    std::size_t substation = 0;   // index into the substation table
    Date window_end{};            // day t
    Date label_date{};            // day t+1
    std::vector<double> window;   // d_{t-L+1} .. d_t, chronological
    int label = 0;                // 1[d_{t+1} > 0]
};

/// Sliding windows with strict chronology: one sample per day t for which the
/// full look-back and the next-day label both exist. Series shorter than L+1
/// days yield no samples.
std::vector<Sample> make_windows(const DailySeries& series, std::size_t substation_index,
                                 std::size_t lookback = 14);

} // namespace stgt
