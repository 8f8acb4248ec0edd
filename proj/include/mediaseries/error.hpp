#pragma once

#include <stdexcept>
#include <string>

namespace mediaseries {

/// Broad failure class; the CLI maps each to its exit code.
enum class ErrorCategory { config, data, numeric };

class Error : public std::runtime_error {
public:
    Error(std::string code, ErrorCategory category, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)), category_(category) {}

    const std::string& code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_; }

private:
    std::string code_;
    ErrorCategory category_;
};

#define MEDIASERIES_DEFINE_ERROR(Name, Category)                                 \
    struct Name : Error {                                                        \
        explicit Name(const std::string& message)                                \
            : Error(#Name, ErrorCategory::Category, message) {}                  \
    };

// corpus
MEDIASERIES_DEFINE_ERROR(ExtractionFailed, data)
MEDIASERIES_DEFINE_ERROR(DateUnparseable, data)
MEDIASERIES_DEFINE_ERROR(EmptyVocabulary, data)
MEDIASERIES_DEFINE_ERROR(ParseError, data)

// classify
MEDIASERIES_DEFINE_ERROR(ShapeMismatch, data)
MEDIASERIES_DEFINE_ERROR(LengthMismatch, data)
MEDIASERIES_DEFINE_ERROR(EmptyDataset, data)
MEDIASERIES_DEFINE_ERROR(NotBinaryModel, config)

// timeseries / tda / emit
MEDIASERIES_DEFINE_ERROR(EmptyInput, data)
MEDIASERIES_DEFINE_ERROR(TooShort, data)
MEDIASERIES_DEFINE_ERROR(GapsPresent, data)
MEDIASERIES_DEFINE_ERROR(InsufficientOverlap, data)
MEDIASERIES_DEFINE_ERROR(ZeroVariance, numeric)
MEDIASERIES_DEFINE_ERROR(RankDeficient, numeric)
MEDIASERIES_DEFINE_ERROR(DegenerateInput, numeric)
MEDIASERIES_DEFINE_ERROR(BadCover, config)
MEDIASERIES_DEFINE_ERROR(YearOutOfRange, data)

// cli
MEDIASERIES_DEFINE_ERROR(ConfigInvalid, config)

#undef MEDIASERIES_DEFINE_ERROR

}  // namespace mediaseries
