#pragma once

#include <stdexcept>
#include <string>

namespace brt {

// Error taxonomy shared by all modules. Each kind maps to one failure
// signal from the module contracts; callers can catch the base type or
// a specific kind.
enum class ErrorKind {
    Shape,
    NotFitted,
    DegenerateBatch,
    DegenerateSeries,
    EpisodeOver,
    NoData,
    MisalignedPanels,
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error(ErrorKind::Shape, m) {}
};
struct NotFittedError : Error {
    explicit NotFittedError(const std::string& m) : Error(ErrorKind::NotFitted, m) {}
};
struct DegenerateBatchError : Error {
    explicit DegenerateBatchError(const std::string& m) : Error(ErrorKind::DegenerateBatch, m) {}
};
struct DegenerateSeriesError : Error {
    explicit DegenerateSeriesError(const std::string& m) : Error(ErrorKind::DegenerateSeries, m) {}
};
struct EpisodeOverError : Error {
    explicit EpisodeOverError(const std::string& m) : Error(ErrorKind::EpisodeOver, m) {}
};
struct NoDataError : Error {
    explicit NoDataError(const std::string& m) : Error(ErrorKind::NoData, m) {}
};
struct MisalignedPanelsError : Error {
    explicit MisalignedPanelsError(const std::string& m) : Error(ErrorKind::MisalignedPanels, m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

} // namespace brt
