#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wrfml {

/// Hourly timestamp in local time. Days are counted from the civil epoch
/// 1970-01-01 so that independently parsed files share one axis.
struct HourStamp {
    std::int64_t day_index = 0;
    int hour_of_day = 0;

    std::int64_t absolute_hour() const noexcept { return day_index * 24 + hour_of_day; }
    static HourStamp from_absolute_hour(std::int64_t h) noexcept;
    HourStamp shifted(std::int64_t hours) const noexcept { return from_absolute_hour(absolute_hour() + hours); }

    friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
};

std::string format_date(std::int64_t day_index);
std::optional<std::int64_t> parse_date(std::string_view iso);
std::string to_string(const HourStamp& t);

enum class Channel : std::uint8_t { M1 = 0, M2 = 1, M3 = 2, M4 = 3 };
inline constexpr std::array<Channel, 4> kAllChannels{Channel::M1, Channel::M2, Channel::M3, Channel::M4};

std::string_view to_string(Channel c);
std::optional<Channel> parse_channel(std::string_view s);

/// The five physical variables carried by every series, in feature order.
struct WeatherVars {
    double temperature = 0.0;       // deg C
    double relative_humidity = 0.0; // %
    double ghi = 0.0;               // W/m2
    double dhi = 0.0;               // W/m2
    double di = 0.0;                // W/m2, derived

    std::array<double, 5> as_array() const noexcept { return {temperature, relative_humidity, ghi, dhi, di}; }
    friend bool operator==(const WeatherVars&, const WeatherVars&) = default;
};

inline constexpr std::array<std::string_view, 5> kVariableNames{"T", "RH", "GHI", "DHI", "DI"};

/// Data-quality flags raised while ingesting a row.
struct QualityFlags {
    bool di_clamped = false;
    bool rh_clipped = false;
    friend bool operator==(const QualityFlags&, const QualityFlags&) = default;
};

struct MetObservation {
    std::string station_id;
    HourStamp time;
    WeatherVars vars;
    QualityFlags flags;
    friend bool operator==(const MetObservation&, const MetObservation&) = default;
};

struct NwpOutput {
    Channel channel = Channel::M1;
    std::string location_id;
    HourStamp time;
    WeatherVars vars;
    QualityFlags flags;
    friend bool operator==(const NwpOutput&, const NwpOutput&) = default;
};

struct DirectIrradiance {
    double value = 0.0;
    bool clamped = false;
};

/// Beam component GHI - DHI, clamped at zero (flagged) when DHI exceeds GHI.
DirectIrradiance derive_direct_irradiance(double ghi, double dhi);

/// Builds WeatherVars from raw readings: derives DI and clips RH into [0, 100].
/// Throws NegativeInput for negative irradiance.
WeatherVars make_vars(double temperature, double rh, double ghi, double dhi, QualityFlags* flags = nullptr);

std::vector<MetObservation> parse_met_csv(std::string_view source);
std::vector<NwpOutput> parse_nwp_csv(std::string_view source);

std::string write_met_csv(std::span<const MetObservation> rows);
std::string write_nwp_csv(std::span<const NwpOutput> rows);

inline constexpr std::string_view kMetHeader = "station_id,date,hour,temperature_c,rh_pct,ghi_wm2,dhi_wm2";
inline constexpr std::string_view kNwpHeader = "channel,location_id,date,hour,temperature_c,rh_pct,ghi_wm2,dhi_wm2";

struct AlignedRow {
    HourStamp time;
    WeatherVars met;
    /// Indexed by AlignedDataset::slot(channel position, location position).
    std::vector<WeatherVars> nwp;
};

/// Target met series joined with NWP outputs for every (channel, location)
/// pair. Location position 0 is the target, 1.. are the neighbors.
struct AlignedDataset {
    std::string target_location;
    std::vector<std::string> neighbor_locations;
    std::vector<Channel> channel_set;
    std::vector<AlignedRow> rows;
    /// Full target met series, unfiltered and unaligned, used for lag lookups.
    std::map<HourStamp, WeatherVars> met_history;
    bool filtered = false;
    std::size_t dropped = 0;

    std::size_t location_count() const noexcept { return 1 + neighbor_locations.size(); }
    std::optional<std::size_t> channel_position(Channel c) const;
    bool has_channel(Channel c) const { return channel_position(c).has_value(); }
    std::size_t slot(std::size_t channel_pos, std::size_t location_pos) const noexcept {
        return channel_pos * location_count() + location_pos;
    }
    const WeatherVars& nwp(const AlignedRow& row, Channel c, std::size_t location_pos = 0) const;
    const std::string& location_id(std::size_t location_pos) const;
    /// Met reading at t from the unfiltered history, if present.
    const WeatherVars* met_at(const HourStamp& t) const;
};

/// Inner join on HourStamp. `dropped` counts timestamps present in at least
/// one required series but missing from the intersection.
AlignedDataset align(std::span<const MetObservation> met, std::span<const NwpOutput> nwp, const std::string& target,
                     std::span<const std::string> neighbors);

inline constexpr int kDaylightFirstHour = 8;
inline constexpr int kDaylightLastHour = 19;

constexpr bool is_daylight(int hour_of_day) noexcept {
    return hour_of_day >= kDaylightFirstHour && hour_of_day <= kDaylightLastHour;
}

AlignedDataset daylight_filter(const AlignedDataset& ds);

enum class SplitMode { Random, Chronological };
std::string_view to_string(SplitMode m);
std::optional<SplitMode> parse_split_mode(std::string_view s);

/// Row indices of a train/test partition, each ascending (time order).
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed, SplitMode mode);

std::pair<AlignedDataset, AlignedDataset> split_train_test(const AlignedDataset& ds, double test_fraction,
                                                           std::uint64_t seed, SplitMode mode = SplitMode::Random);

} // namespace wrfml
