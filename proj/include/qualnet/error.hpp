#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qualnet {

enum class ErrorKind {
    // ingest
    EmptyCorpus,
    MalformedRecord,
    // provider
    Precondition,
    ProviderUnavailable,
    ProviderRejected,
    // pipeline
    MalformedProviderOutput,
    InvalidLabel,
    // network
    NoMappedIndicators,
    NoEdges,
    UnknownNode,
    EmptyGraph,
    // metrics
    MissingAdjudication,
    NoMatchedPairs,
    DegenerateInput,
    DegenerateMarginals,
    // store
    IoError,
    ValidationFailed,
    SchemaMismatch,
    // service
    NotFound,
    InvalidInput,
    Conflict,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace qualnet
