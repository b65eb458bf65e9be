#pragma once

#include <stdexcept>
#include <string>

namespace faim {

// Base class so callers can catch anything raised by this library in one clause.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed on-disk data. Carries the byte offset (or -1 when not applicable)
// and the field being parsed when the problem was detected.
struct FormatError : Error {
    FormatError(const std::string& field, long long offset, const std::string& what)
        : Error("format error at field '" + field + "'" +
                (offset >= 0 ? " (byte " + std::to_string(offset) + ")" : "") + ": " + what),
          field(field),
          byte_offset(offset) {}
    std::string field;
    long long byte_offset;
};

struct DimMismatch : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct ZeroVectorError : Error {
    ZeroVectorError(int sample_id, const std::string& which)
        : Error("zero vector: sample " + std::to_string(sample_id) + ", feature " + which),
          sample_id(sample_id),
          which_feature(which) {}
    int sample_id;
    std::string which_feature;
};

struct KTooLarge : Error {
    explicit KTooLarge(int row, int k, int available)
        : Error("k=" + std::to_string(k) + " too large for row " + std::to_string(row) +
                " (" + std::to_string(available) + " candidates)"),
          row(row) {}
    int row;
};

struct LabelOutOfRange : Error {
    using Error::Error;
};

struct NoValidAnchor : Error {
    using Error::Error;
};

struct SingleOutfitIdentity : Error {
    explicit SingleOutfitIdentity(int sample_id)
        : Error("sample " + std::to_string(sample_id) +
                ": identity has a single outfit, clothes-changing variance undefined"),
          sample_id(sample_id) {}
    int sample_id;
};

struct NegativeRho : Error {
    using Error::Error;
};

struct OutOfRange : Error {
    using Error::Error;
};

struct ConfigInvalid : Error {
    ConfigInvalid(const std::string& field, const std::string& what)
        : Error("invalid config field '" + field + "': " + what), field(field) {}
    std::string field;
};

struct InsufficientClothes : Error {
    explicit InsufficientClothes(int identity)
        : Error("identity " + std::to_string(identity) +
                " has fewer than two clothes labels, cannot build clothes-changing split"),
          identity(identity) {}
    int identity;
};

struct NoEvaluableQueries : Error {
    using Error::Error;
};

}  // namespace faim
