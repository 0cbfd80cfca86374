#pragma once

#include <stdexcept>
#include <string>

namespace brc {

// Every failure the library reports derives from brc::Error so callers can
// catch the whole family in one place (the CLI does).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundsError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };

}  // namespace brc
