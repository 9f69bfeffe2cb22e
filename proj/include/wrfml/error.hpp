#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wrfml {

enum class ErrorCode {
    MissingColumn,
    BadNumeric,
    DuplicateTimestamp,
    UnknownChannel,
    NegativeInput,
    EmptyIntersection,
    UnknownLocation,
    TooFewRows,
    MissingChannel,
    MissingNeighbor,
    EmptyResult,
    DegenerateInput,
    NonFiniteInput,
    ShapeMismatch,
    WrongFamily,
    ZeroMeanTruth,
    LengthMismatch,
    BadK,
    DuplicateLabel,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the toolkit. `line` is the 1-based line number in
/// the source file for parse errors; `field` names the offending column or
/// config key when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt,
          std::string field = {});

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
    std::string field_;
};

} // namespace wrfml
