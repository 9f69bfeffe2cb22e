#include "wrfml/core_data.hpp"

#include "wrfml/error.hpp"
#include "wrfml/random.hpp"
#include "wrfml/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <tuple>
#include <unordered_map>

namespace wrfml {

namespace {

constexpr std::uint64_t kSplitStream = 0x53504C4954ULL; // "SPLIT"

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

/// Iterates the non-blank lines of a CSV buffer with 1-based line numbers.
template <typename Fn>
void for_each_line(std::string_view source, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < source.size()) {
        auto end = source.find('\n', start);
        if (end == std::string_view::npos)
            end = source.size();
        ++line_no;
        std::string_view line = source.substr(start, end - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!text::trim(line).empty())
            fn(line_no, line);
        start = end + 1;
    }
}

/// Maps required column names to their positions in the header line.
template <std::size_t N>
std::array<std::size_t, N> locate_columns(std::string_view header, const std::array<std::string_view, N>& required) {
    const auto cells = text::split_csv_line(header);
    std::array<std::size_t, N> positions{};
    for (std::size_t i = 0; i < N; ++i) {
        auto it = std::find(cells.begin(), cells.end(), required[i]);
        if (it == cells.end())
            throw Error(ErrorCode::MissingColumn, "missing column '" + std::string(required[i]) + "'", 1,
                        std::string(required[i]));
        positions[i] = static_cast<std::size_t>(it - cells.begin());
    }
    return positions;
}

struct RowReader {
    std::size_t line;
    std::vector<std::string_view> cells;

    std::string_view cell(std::size_t pos, std::string_view column) const {
        if (pos >= cells.size())
            throw Error(ErrorCode::BadNumeric, "line " + std::to_string(line) + ": missing cell for '" +
                                                   std::string(column) + "'",
                        line, std::string(column));
        return cells[pos];
    }

    double number(std::size_t pos, std::string_view column) const {
        const auto raw = cell(pos, column);
        auto v = text::parse_double(raw);
        if (!v)
            throw Error(ErrorCode::BadNumeric, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                                   "': cannot parse '" + std::string(raw) + "' as a number",
                        line, std::string(column));
        return *v;
    }

    std::string identifier(std::size_t pos, std::string_view column) const {
        const auto raw = cell(pos, column);
        if (raw.empty())
            throw Error(ErrorCode::BadNumeric, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                                   "' is blank",
                        line, std::string(column));
        return std::string(raw);
    }

    HourStamp time(std::size_t date_pos, std::size_t hour_pos) const {
        const auto date_raw = cell(date_pos, "date");
        auto day = parse_date(date_raw);
        if (!day)
            throw Error(ErrorCode::BadNumeric,
                        "line " + std::to_string(line) + ": column 'date': invalid date '" + std::string(date_raw) + "'",
                        line, "date");
        const auto hour_raw = cell(hour_pos, "hour");
        auto hour = text::parse_int(hour_raw);
        if (!hour || *hour < 0 || *hour > 23)
            throw Error(ErrorCode::BadNumeric,
                        "line " + std::to_string(line) + ": column 'hour': invalid hour '" + std::string(hour_raw) + "'",
                        line, "hour");
        return HourStamp{*day, static_cast<int>(*hour)};
    }

    WeatherVars vars(const std::size_t* pos, QualityFlags& flags) const {
        const double t = number(pos[0], "temperature_c");
        const double rh = number(pos[1], "rh_pct");
        const double ghi = number(pos[2], "ghi_wm2");
        const double dhi = number(pos[3], "dhi_wm2");
        try {
            return make_vars(t, rh, ghi, dhi, &flags);
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what(), line, e.field());
        }
    }
};

void append_vars(std::string& out, const WeatherVars& v) {
    out += text::format_double(v.temperature);
    out += ',';
    out += text::format_double(v.relative_humidity);
    out += ',';
    out += text::format_double(v.ghi);
    out += ',';
    out += text::format_double(v.dhi);
    out += '\n';
}

void append_time(std::string& out, const HourStamp& t) {
    out += format_date(t.day_index);
    out += ',';
    out += std::to_string(t.hour_of_day);
    out += ',';
}

} // namespace

HourStamp HourStamp::from_absolute_hour(std::int64_t h) noexcept {
    const auto day = floor_div(h, 24);
    return HourStamp{day, static_cast<int>(h - day * 24)};
}

std::string format_date(std::int64_t day_index) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{day_index}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<std::int64_t> parse_date(std::string_view iso) {
    using namespace std::chrono;
    iso = text::trim(iso);
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        return std::nullopt;
    auto y = text::parse_int(iso.substr(0, 4));
    auto m = text::parse_int(iso.substr(5, 2));
    auto d = text::parse_int(iso.substr(8, 2));
    if (!y || !m || !d || *m < 1 || *d < 1)
        return std::nullopt;
    const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                             day{static_cast<unsigned>(*d)}};
    if (!ymd.ok())
        return std::nullopt;
    const auto count = sys_days{ymd}.time_since_epoch().count();
    if (count < 0)
        return std::nullopt;
    return count;
}

std::string to_string(const HourStamp& t) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "T%02d", t.hour_of_day);
    return format_date(t.day_index) + buf;
}

std::string_view to_string(Channel c) {
    static constexpr std::array<std::string_view, 4> names{"M1", "M2", "M3", "M4"};
    return names[static_cast<std::size_t>(c)];
}

std::optional<Channel> parse_channel(std::string_view s) {
    for (auto c : kAllChannels)
        if (to_string(c) == s)
            return c;
    return std::nullopt;
}

DirectIrradiance derive_direct_irradiance(double ghi, double dhi) {
    if (ghi < 0.0)
        throw Error(ErrorCode::NegativeInput, "negative GHI " + text::format_double(ghi), std::nullopt, "ghi_wm2");
    if (dhi < 0.0)
        throw Error(ErrorCode::NegativeInput, "negative DHI " + text::format_double(dhi), std::nullopt, "dhi_wm2");
    if (dhi > ghi)
        return {0.0, true};
    return {ghi - dhi, false};
}

WeatherVars make_vars(double temperature, double rh, double ghi, double dhi, QualityFlags* flags) {
    const auto di = derive_direct_irradiance(ghi, dhi);
    const double clipped_rh = std::clamp(rh, 0.0, 100.0);
    if (flags) {
        flags->di_clamped = di.clamped;
        flags->rh_clipped = clipped_rh != rh;
    }
    return WeatherVars{temperature, clipped_rh, ghi, dhi, di.value};
}

std::vector<MetObservation> parse_met_csv(std::string_view source) {
    static constexpr std::array<std::string_view, 7> columns{"station_id", "date",    "hour",   "temperature_c",
                                                             "rh_pct",     "ghi_wm2", "dhi_wm2"};
    std::vector<MetObservation> out;
    std::optional<std::array<std::size_t, 7>> pos;
    std::set<std::pair<std::string, HourStamp>> seen;
    for_each_line(source, [&](std::size_t line_no, std::string_view line) {
        if (!pos) {
            pos = locate_columns(line, columns);
            return;
        }
        RowReader row{line_no, text::split_csv_line(line)};
        MetObservation obs;
        obs.station_id = row.identifier((*pos)[0], columns[0]);
        obs.time = row.time((*pos)[1], (*pos)[2]);
        obs.vars = row.vars(pos->data() + 3, obs.flags);
        if (!seen.emplace(obs.station_id, obs.time).second)
            throw Error(ErrorCode::DuplicateTimestamp,
                        "line " + std::to_string(line_no) + ": duplicate timestamp " + to_string(obs.time) +
                            " for station " + obs.station_id,
                        line_no);
        out.push_back(std::move(obs));
    });
    if (!pos)
        throw Error(ErrorCode::MissingColumn, "missing header (expected '" + std::string(kMetHeader) + "')", 1,
                    std::string(columns[0]));
    return out;
}

std::vector<NwpOutput> parse_nwp_csv(std::string_view source) {
    static constexpr std::array<std::string_view, 8> columns{"channel", "location_id",   "date",
                                                             "hour",    "temperature_c", "rh_pct",
                                                             "ghi_wm2", "dhi_wm2"};
    std::vector<NwpOutput> out;
    std::optional<std::array<std::size_t, 8>> pos;
    std::set<std::tuple<Channel, std::string, HourStamp>> seen;
    for_each_line(source, [&](std::size_t line_no, std::string_view line) {
        if (!pos) {
            pos = locate_columns(line, columns);
            return;
        }
        RowReader row{line_no, text::split_csv_line(line)};
        NwpOutput rec;
        const auto channel_raw = row.cell((*pos)[0], columns[0]);
        auto channel = parse_channel(channel_raw);
        if (!channel)
            throw Error(ErrorCode::UnknownChannel,
                        "line " + std::to_string(line_no) + ": unknown channel '" + std::string(channel_raw) + "'",
                        line_no, "channel");
        rec.channel = *channel;
        rec.location_id = row.identifier((*pos)[1], columns[1]);
        rec.time = row.time((*pos)[2], (*pos)[3]);
        rec.vars = row.vars(pos->data() + 4, rec.flags);
        if (!seen.emplace(rec.channel, rec.location_id, rec.time).second)
            throw Error(ErrorCode::DuplicateTimestamp,
                        "line " + std::to_string(line_no) + ": duplicate timestamp " + to_string(rec.time) + " for " +
                            std::string(to_string(rec.channel)) + "/" + rec.location_id,
                        line_no);
        out.push_back(std::move(rec));
    });
    if (!pos)
        throw Error(ErrorCode::MissingColumn, "missing header (expected '" + std::string(kNwpHeader) + "')", 1,
                    std::string(columns[0]));
    return out;
}

std::string write_met_csv(std::span<const MetObservation> rows) {
    std::string out(kMetHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += r.station_id;
        out += ',';
        append_time(out, r.time);
        append_vars(out, r.vars);
    }
    return out;
}

std::string write_nwp_csv(std::span<const NwpOutput> rows) {
    std::string out(kNwpHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += to_string(r.channel);
        out += ',';
        out += r.location_id;
        out += ',';
        append_time(out, r.time);
        append_vars(out, r.vars);
    }
    return out;
}

std::optional<std::size_t> AlignedDataset::channel_position(Channel c) const {
    auto it = std::find(channel_set.begin(), channel_set.end(), c);
    if (it == channel_set.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - channel_set.begin());
}

const WeatherVars& AlignedDataset::nwp(const AlignedRow& row, Channel c, std::size_t location_pos) const {
    auto pos = channel_position(c);
    if (!pos)
        throw Error(ErrorCode::MissingChannel, "channel " + std::string(to_string(c)) + " not in dataset");
    if (location_pos >= location_count())
        throw Error(ErrorCode::MissingNeighbor, "location position " + std::to_string(location_pos) + " not in dataset");
    return row.nwp[slot(*pos, location_pos)];
}

const std::string& AlignedDataset::location_id(std::size_t location_pos) const {
    return location_pos == 0 ? target_location : neighbor_locations.at(location_pos - 1);
}

const WeatherVars* AlignedDataset::met_at(const HourStamp& t) const {
    auto it = met_history.find(t);
    return it == met_history.end() ? nullptr : &it->second;
}

AlignedDataset align(std::span<const MetObservation> met, std::span<const NwpOutput> nwp, const std::string& target,
                     std::span<const std::string> neighbors) {
    if (neighbors.size() > 3)
        throw Error(ErrorCode::InvalidConfig, "at most 3 neighbor locations are supported", std::nullopt, "neighbors");
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        if (neighbors[i] == target || std::find(neighbors.begin(), neighbors.begin() + i, neighbors[i]) !=
                                          neighbors.begin() + i)
            throw Error(ErrorCode::InvalidConfig, "duplicate location '" + neighbors[i] + "'", std::nullopt,
                        "neighbors");
    }

    AlignedDataset ds;
    ds.target_location = target;
    ds.neighbor_locations.assign(neighbors.begin(), neighbors.end());

    for (const auto& m : met)
        if (m.station_id == target)
            ds.met_history.emplace(m.time, m.vars);
    if (ds.met_history.empty())
        throw Error(ErrorCode::UnknownLocation, "no met observations for target '" + target + "'", std::nullopt,
                    target);

    std::map<std::pair<Channel, std::string>, std::map<HourStamp, WeatherVars>> series;
    for (const auto& r : nwp)
        series[{r.channel, r.location_id}].emplace(r.time, r.vars);

    for (auto c : kAllChannels)
        if (series.count({c, target}))
            ds.channel_set.push_back(c);
    if (ds.channel_set.empty())
        throw Error(ErrorCode::UnknownLocation, "no NWP series for target '" + target + "'", std::nullopt, target);

    std::vector<const std::map<HourStamp, WeatherVars>*> required; // slot order
    for (auto c : ds.channel_set) {
        for (std::size_t loc = 0; loc < ds.location_count(); ++loc) {
            const auto& id = ds.location_id(loc);
            auto it = series.find({c, id});
            if (it == series.end()) {
                const bool known = std::any_of(series.begin(), series.end(),
                                               [&](const auto& kv) { return kv.first.second == id; });
                if (!known)
                    throw Error(ErrorCode::UnknownLocation, "no NWP series for location '" + id + "'", std::nullopt,
                                id);
                throw Error(ErrorCode::MissingChannel,
                            "location '" + id + "' lacks channel " + std::string(to_string(c)), std::nullopt, id);
            }
            required.push_back(&it->second);
        }
    }

    std::set<HourStamp> all_times;
    for (const auto& [t, _] : ds.met_history)
        all_times.insert(t);
    for (const auto* s : required)
        for (const auto& [t, _] : *s)
            all_times.insert(t);

    for (const auto& [t, vars] : ds.met_history) {
        AlignedRow row{t, vars, {}};
        row.nwp.reserve(required.size());
        bool complete = true;
        for (const auto* s : required) {
            auto it = s->find(t);
            if (it == s->end()) {
                complete = false;
                break;
            }
            row.nwp.push_back(it->second);
        }
        if (complete)
            ds.rows.push_back(std::move(row));
    }
    if (ds.rows.empty())
        throw Error(ErrorCode::EmptyIntersection, "met and NWP series share no timestamps");
    ds.dropped = all_times.size() - ds.rows.size();
    return ds;
}

AlignedDataset daylight_filter(const AlignedDataset& ds) {
    AlignedDataset out;
    out.target_location = ds.target_location;
    out.neighbor_locations = ds.neighbor_locations;
    out.channel_set = ds.channel_set;
    out.met_history = ds.met_history;
    out.dropped = ds.dropped;
    out.filtered = true;
    for (const auto& row : ds.rows)
        if (is_daylight(row.time.hour_of_day))
            out.rows.push_back(row);
    return out;
}

std::string_view to_string(SplitMode m) {
    return m == SplitMode::Random ? "random" : "chronological";
}

std::optional<SplitMode> parse_split_mode(std::string_view s) {
    if (s == "random")
        return SplitMode::Random;
    if (s == "chronological")
        return SplitMode::Chronological;
    return std::nullopt;
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed, SplitMode mode) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(ErrorCode::InvalidConfig, "test_fraction must lie in (0, 1)", std::nullopt, "test_fraction");
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n)
        throw Error(ErrorCode::TooFewRows, "cannot split " + std::to_string(n) + " rows with test fraction " +
                                               text::format_double(test_fraction));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    SplitIndices out;
    if (mode == SplitMode::Random) {
        Rng rng(derive_seed(seed, kSplitStream));
        rng.shuffle(std::span<std::size_t>(order));
        out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
        std::sort(out.test.begin(), out.test.end());
        std::sort(out.train.begin(), out.train.end());
    } else {
        out.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
        out.test.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
    }
    return out;
}

std::pair<AlignedDataset, AlignedDataset> split_train_test(const AlignedDataset& ds, double test_fraction,
                                                           std::uint64_t seed, SplitMode mode) {
    if (ds.rows.empty())
        throw Error(ErrorCode::TooFewRows, "cannot split an empty dataset");
    const auto idx = split_indices(ds.rows.size(), test_fraction, seed, mode);
    auto subset = [&](const std::vector<std::size_t>& rows) {
        AlignedDataset out;
        out.target_location = ds.target_location;
        out.neighbor_locations = ds.neighbor_locations;
        out.channel_set = ds.channel_set;
        out.met_history = ds.met_history;
        out.filtered = ds.filtered;
        out.dropped = ds.dropped;
        out.rows.reserve(rows.size());
        for (auto i : rows)
            out.rows.push_back(ds.rows[i]);
        return out;
    };
    return {subset(idx.train), subset(idx.test)};
}

} // namespace wrfml
