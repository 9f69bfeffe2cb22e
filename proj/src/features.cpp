#include "wrfml/features.hpp"

#include "wrfml/error.hpp"
#include "wrfml/text.hpp"

#include <algorithm>

namespace wrfml {

namespace {

void require_channel(const AlignedDataset& ds, Channel c) {
    if (!ds.has_channel(c))
        throw Error(ErrorCode::MissingChannel, "dataset has no channel " + std::string(to_string(c)));
}

struct Layout {
    std::vector<ColumnSource> sources;
    // Per WRF block: (channel, location position), in column order.
    std::vector<std::pair<Channel, std::size_t>> wrf_blocks;
    int lag = 0;
};

Layout make_layout(const AlignedDataset& ds, const FeatureVariant& v) {
    Layout layout;
    layout.sources.push_back({"t", "time", 0});

    auto add_wrf_block = [&](Channel c, std::size_t loc) {
        const auto& id = ds.location_id(loc);
        for (auto var : kVariableNames) {
            std::string name = std::string(var) + "_wrf_" + std::string(to_string(c));
            if (loc != 0)
                name += "_" + id;
            layout.sources.push_back({std::move(name), "nwp:" + std::string(to_string(c)) + ":" + id, 0});
        }
        layout.wrf_blocks.emplace_back(c, loc);
    };

    if (v.needs_channel()) {
        if (!v.channel)
            throw Error(ErrorCode::MissingChannel, "variant " + std::string(to_string(v.kind)) + " needs a channel");
        require_channel(ds, *v.channel);
        add_wrf_block(*v.channel, 0);
        if (v.kind == VariantKind::Neighbor) {
            if (ds.neighbor_locations.empty())
                throw Error(ErrorCode::MissingNeighbor, "Neighbor variant needs at least one neighbor location");
            for (std::size_t loc = 1; loc < ds.location_count(); ++loc)
                add_wrf_block(*v.channel, loc);
        }
    } else {
        for (auto c : kAllChannels)
            require_channel(ds, c);
        for (auto c : kAllChannels)
            add_wrf_block(c, 0);
    }

    layout.lag = v.lag_hours();
    if (layout.lag > 0) {
        const auto suffix = "_met_lag" + std::to_string(layout.lag);
        for (auto var : kVariableNames)
            layout.sources.push_back({std::string(var) + suffix, "met:" + ds.target_location, -layout.lag});
    }
    return layout;
}

} // namespace

std::string_view to_string(VariantKind k) {
    switch (k) {
    case VariantKind::Base: return "Base";
    case VariantKind::Neighbor: return "Neighbor";
    case VariantKind::Lag1: return "Lag1";
    case VariantKind::Lag24: return "Lag24";
    case VariantKind::Ensemble: return "Ensemble";
    case VariantKind::EnsembleLag24: return "EnsembleLag24";
    }
    return "?";
}

std::optional<VariantKind> parse_variant_kind(std::string_view s) {
    for (auto k : {VariantKind::Base, VariantKind::Neighbor, VariantKind::Lag1, VariantKind::Lag24,
                   VariantKind::Ensemble, VariantKind::EnsembleLag24})
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

int FeatureVariant::lag_hours() const noexcept {
    switch (kind) {
    case VariantKind::Lag1: return 1;
    case VariantKind::Lag24:
    case VariantKind::EnsembleLag24: return 24;
    default: return 0;
    }
}

std::size_t FeatureVariant::width(std::size_t neighbor_count) const noexcept {
    switch (kind) {
    case VariantKind::Base: return 1 + 5;
    case VariantKind::Neighbor: return 1 + 5 * (1 + neighbor_count);
    case VariantKind::Lag1:
    case VariantKind::Lag24: return 1 + 5 + 5;
    case VariantKind::Ensemble: return 1 + 20;
    case VariantKind::EnsembleLag24: return 1 + 20 + 5;
    }
    return 0;
}

std::string FeatureVariant::name() const {
    std::string out(to_string(kind));
    if (channel && needs_channel())
        out += "_" + std::string(to_string(*channel));
    return out;
}

FeatureMatrix build_features(const AlignedDataset& ds, const FeatureVariant& variant) {
    const auto layout = make_layout(ds, variant);

    FeatureMatrix fm;
    fm.variant = variant;
    fm.sources = layout.sources;
    for (const auto& s : layout.sources)
        fm.column_names.push_back(s.column);

    std::vector<double> buf;
    buf.reserve(layout.sources.size());
    for (const auto& row : ds.rows) {
        const WeatherVars* lagged = nullptr;
        if (layout.lag > 0) {
            lagged = ds.met_at(row.time.shifted(-layout.lag));
            if (!lagged) {
                ++fm.dropped;
                continue;
            }
        }
        buf.clear();
        buf.push_back(static_cast<double>(row.time.hour_of_day));
        for (const auto& [c, loc] : layout.wrf_blocks)
            for (double v : ds.nwp(row, c, loc).as_array())
                buf.push_back(v);
        if (lagged)
            for (double v : lagged->as_array())
                buf.push_back(v);
        if (fm.x.empty())
            fm.x = Matrix(0, buf.size());
        fm.x.append_row(buf);
        fm.y.push_back(row.met.ghi);
        fm.row_times.push_back(row.time);
    }
    if (fm.y.empty())
        throw Error(ErrorCode::EmptyResult, "variant " + variant.name() + " produced no rows");
    return fm;
}

std::vector<ColumnSource> column_provenance(const FeatureMatrix& fm) {
    return fm.sources;
}

std::vector<ColumnSource> leakage_violations(const FeatureMatrix& fm) {
    std::vector<ColumnSource> bad;
    for (const auto& s : column_provenance(fm)) {
        if ((s.is_met() && s.offset_hours >= 0) || (s.is_nwp() && s.offset_hours != 0))
            bad.push_back(s);
    }
    return bad;
}

std::string feature_matrix_to_csv(const FeatureMatrix& fm) {
    std::string out;
    for (const auto& name : fm.column_names) {
        out += name;
        out += ',';
    }
    out += "target\n";
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        for (double v : fm.x.row(r)) {
            out += text::format_double(v);
            out += ',';
        }
        out += text::format_double(fm.y[r]);
        out += '\n';
    }
    return out;
}

std::string BaselineSpec::name() const {
    if (kind == Kind::RawWrf)
        return "RawWrf_" + std::string(to_string(channel));
    return "Persistence_" + std::to_string(lag_hours) + "h";
}

BaselinePrediction predict_baseline(const AlignedDataset& ds, const BaselineSpec& spec) {
    BaselinePrediction out;
    if (spec.kind == BaselineSpec::Kind::RawWrf) {
        require_channel(ds, spec.channel);
        for (const auto& row : ds.rows) {
            out.predictions.push_back(ds.nwp(row, spec.channel).ghi);
            out.truth.push_back(row.met.ghi);
            out.row_times.push_back(row.time);
        }
    } else {
        if (spec.lag_hours != 1 && spec.lag_hours != 24)
            throw Error(ErrorCode::InvalidConfig, "persistence lag must be 1 or 24 hours", std::nullopt, "lag_hours");
        for (const auto& row : ds.rows) {
            const auto* source = ds.met_at(row.time.shifted(-spec.lag_hours));
            if (!source) {
                ++out.dropped;
                continue;
            }
            out.predictions.push_back(source->ghi);
            out.truth.push_back(row.met.ghi);
            out.row_times.push_back(row.time);
        }
    }
    if (out.predictions.empty())
        throw Error(ErrorCode::EmptyResult, "baseline " + spec.name() + " produced no rows");
    return out;
}

} // namespace wrfml
