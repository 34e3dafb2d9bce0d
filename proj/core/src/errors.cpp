#include "topicforge/errors.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace topicforge {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InputFormat: return "InputFormatError";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorKind::UnknownTopicId: return "UnknownTopicId";
    case ErrorKind::OverlappingGroups: return "OverlappingGroups";
    case ErrorKind::InvalidCuration: return "InvalidCuration";
    case ErrorKind::NothingToUndo: return "NothingToUndo";
    case ErrorKind::UnknownWord: return "UnknownWord";
    case ErrorKind::VersionConflict: return "VersionConflict";
    case ErrorKind::ModelNotLoaded: return "ModelNotLoaded";
    }
    return "Error";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::ProviderUnavailable: return 4;
    default: return 3;
    }
}

namespace {

std::mutex g_warn_mutex;
WarningHandler g_handler = nullptr;
void* g_handler_user = nullptr;

} // namespace

void set_warning_handler(WarningHandler handler, void* user) {
    std::lock_guard lock(g_warn_mutex);
    g_handler = handler;
    g_handler_user = user;
}

void warn(std::string_view message) {
    std::lock_guard lock(g_warn_mutex);
    if (g_handler != nullptr) {
        g_handler(message, g_handler_user);
        return;
    }
    std::cerr << "warning: " << message << '\n';
}

} // namespace topicforge
