#pragma once

#include "wrfml/core_data.hpp"
#include "wrfml/error.hpp"
#include "wrfml/synth.hpp"

#include <doctest.h>

#include <string>
#include <vector>

namespace testing {

/// Asserts that `expr` throws wrfml::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected_code)                                                                        \
    do {                                                                                                             \
        bool thrown_ = false;                                                                                        \
        try {                                                                                                        \
            (void)(expr);                                                                                            \
        } catch (const wrfml::Error& e_) {                                                                           \
            thrown_ = true;                                                                                          \
            CHECK_MESSAGE(e_.code() == (expected_code), "got " << wrfml::to_string(e_.code()) << ": " << e_.what()); \
        }                                                                                                            \
        CHECK_MESSAGE(thrown_, "expected " << wrfml::to_string(expected_code));                                      \
    } while (0)

inline wrfml::ScenarioConfig small_scenario(int days = 6, std::uint64_t seed = 7) {
    wrfml::ScenarioConfig cfg;
    cfg.n_days = days;
    cfg.seed = seed;
    return cfg;
}

/// Daylight-filtered dataset over a small synthetic scenario.
inline wrfml::AlignedDataset small_dataset(int days = 6, std::uint64_t seed = 7) {
    const auto cfg = small_scenario(days, seed);
    const auto s = wrfml::generate_scenario(cfg);
    return wrfml::daylight_filter(wrfml::align(s.met, s.nwp, cfg.target, cfg.neighbors));
}

inline wrfml::MetObservation met_row(const std::string& id, std::int64_t day, int hour, double ghi, double dhi = 0.0) {
    wrfml::MetObservation m;
    m.station_id = id;
    m.time = {day, hour};
    m.vars = wrfml::make_vars(28.0, 75.0, ghi, dhi);
    return m;
}

inline wrfml::NwpOutput nwp_row(wrfml::Channel c, const std::string& id, std::int64_t day, int hour, double ghi) {
    wrfml::NwpOutput o;
    o.channel = c;
    o.location_id = id;
    o.time = {day, hour};
    o.vars = wrfml::make_vars(27.0, 70.0, ghi, ghi / 4);
    return o;
}

} // namespace testing
