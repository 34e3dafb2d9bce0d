#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topicforge {

enum class ErrorKind {
    InputFormat,
    EmptyCorpus,
    Config,
    ProviderUnavailable,
    DimensionMismatch,
    ChecksumMismatch,
    ZeroVector,
    InsufficientData,
    FitDiverged,
    EmptyVocabulary,
    UnknownTopicId,
    OverlappingGroups,
    InvalidCuration,
    NothingToUndo,
    UnknownWord,
    VersionConflict,
    ModelNotLoaded,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code for an error kind: 2 config, 3 data, 4 provider.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Warnings are routed through a process-wide handler (stderr by default).
using WarningHandler = void (*)(std::string_view message, void* user);
void set_warning_handler(WarningHandler handler, void* user = nullptr);
void warn(std::string_view message);

} // namespace topicforge
