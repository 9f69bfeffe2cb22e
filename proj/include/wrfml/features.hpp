#pragma once

#include "wrfml/core_data.hpp"
#include "wrfml/matrix.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wrfml {

enum class VariantKind { Base, Neighbor, Lag1, Lag24, Ensemble, EnsembleLag24 };

std::string_view to_string(VariantKind k);
std::optional<VariantKind> parse_variant_kind(std::string_view s);

/// One WRF-ML feature layout. Single-channel kinds carry a channel; the
/// ensemble kinds use all four channels and carry none.
struct FeatureVariant {
    VariantKind kind = VariantKind::Base;
    std::optional<Channel> channel;

    static FeatureVariant base(Channel c) { return {VariantKind::Base, c}; }
    static FeatureVariant neighbor(Channel c) { return {VariantKind::Neighbor, c}; }
    static FeatureVariant lag1(Channel c) { return {VariantKind::Lag1, c}; }
    static FeatureVariant lag24(Channel c) { return {VariantKind::Lag24, c}; }
    static FeatureVariant ensemble() { return {VariantKind::Ensemble, std::nullopt}; }
    static FeatureVariant ensemble_lag24() { return {VariantKind::EnsembleLag24, std::nullopt}; }

    bool needs_channel() const noexcept { return kind != VariantKind::Ensemble && kind != VariantKind::EnsembleLag24; }
    /// Hours between a lagged met reading and prediction time; 0 when unlagged.
    int lag_hours() const noexcept;
    /// Column count for a dataset with the given number of neighbors.
    std::size_t width(std::size_t neighbor_count = 3) const noexcept;
    std::string name() const;

    friend bool operator==(const FeatureVariant&, const FeatureVariant&) = default;
};

/// Where a feature column comes from: `series` is "time", "met:<loc>" or
/// "nwp:<channel>:<loc>", and `offset_hours` is relative to prediction time.
struct ColumnSource {
    std::string column;
    std::string series;
    int offset_hours = 0;

    bool is_met() const { return series.rfind("met:", 0) == 0; }
    bool is_nwp() const { return series.rfind("nwp:", 0) == 0; }
    friend bool operator==(const ColumnSource&, const ColumnSource&) = default;
};

struct FeatureMatrix {
    FeatureVariant variant;
    std::vector<std::string> column_names;
    Matrix x;
    std::vector<double> y;
    std::vector<HourStamp> row_times;
    std::vector<ColumnSource> sources;
    /// Rows dropped because a lag source was unavailable.
    std::size_t dropped = 0;

    std::size_t rows() const noexcept { return x.rows(); }
    std::size_t cols() const noexcept { return x.cols(); }
};

FeatureMatrix build_features(const AlignedDataset& ds, const FeatureVariant& variant);

std::vector<ColumnSource> column_provenance(const FeatureMatrix& fm);

/// Columns breaking the leakage rule: met-sourced with offset >= 0, or
/// NWP-sourced with a non-zero offset. Empty for every matrix built here.
std::vector<ColumnSource> leakage_violations(const FeatureMatrix& fm);

/// Header = column names plus a trailing `target` column.
std::string feature_matrix_to_csv(const FeatureMatrix& fm);

struct BaselineSpec {
    enum class Kind { RawWrf, Persistence };
    Kind kind = Kind::RawWrf;
    Channel channel = Channel::M1; // RawWrf only
    int lag_hours = 24;            // Persistence only: 1 or 24

    static BaselineSpec raw_wrf(Channel c) { return {Kind::RawWrf, c, 0}; }
    static BaselineSpec persistence(int lag) { return {Kind::Persistence, Channel::M1, lag}; }
    std::string name() const;

    friend bool operator==(const BaselineSpec&, const BaselineSpec&) = default;
};

struct BaselinePrediction {
    std::vector<double> predictions;
    std::vector<double> truth;
    std::vector<HourStamp> row_times;
    std::size_t dropped = 0;
};

BaselinePrediction predict_baseline(const AlignedDataset& ds, const BaselineSpec& spec);

} // namespace wrfml
