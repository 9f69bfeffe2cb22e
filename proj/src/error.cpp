#include "wrfml/error.hpp"

namespace wrfml {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadNumeric: return "BadNumeric";
    case ErrorCode::DuplicateTimestamp: return "DuplicateTimestamp";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::UnknownLocation: return "UnknownLocation";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::MissingNeighbor: return "MissingNeighbor";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::WrongFamily: return "WrongFamily";
    case ErrorCode::ZeroMeanTruth: return "ZeroMeanTruth";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line, std::string field)
    : std::runtime_error(message), code_(code), line_(line), field_(std::move(field)) {}

} // namespace wrfml
