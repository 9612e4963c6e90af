#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace k2v {

enum class ErrorCode {
    InvalidArgument,
    TransportError,
    HttpError,
    RateLimited,
    MissingScriptEntry,
    EmptyCorpus,
    NoPaths,
    UnmaskableQuintuple,
    LeakedAnswer,
    MissingBlank,
    InvalidCount,
    UnknownDomain,
    MalformedCriteriaFile,
    MalformedChecklistOutput,
    EmptyChecklist,
    UnparseableScore,
    EmptyGraph,
    InvalidCounts,
    InvalidSampleSize,
    MalformedInput,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::TransportError: return "transport_error";
    case ErrorCode::HttpError: return "http_error";
    case ErrorCode::RateLimited: return "rate_limited";
    case ErrorCode::MissingScriptEntry: return "missing_script_entry";
    case ErrorCode::EmptyCorpus: return "empty_corpus";
    case ErrorCode::NoPaths: return "no_paths";
    case ErrorCode::UnmaskableQuintuple: return "unmaskable_quintuple";
    case ErrorCode::LeakedAnswer: return "leaked_answer";
    case ErrorCode::MissingBlank: return "missing_blank";
    case ErrorCode::InvalidCount: return "invalid_count";
    case ErrorCode::UnknownDomain: return "unknown_domain";
    case ErrorCode::MalformedCriteriaFile: return "malformed_criteria_file";
    case ErrorCode::MalformedChecklistOutput: return "malformed_checklist_output";
    case ErrorCode::EmptyChecklist: return "empty_checklist";
    case ErrorCode::UnparseableScore: return "unparseable_score";
    case ErrorCode::EmptyGraph: return "empty_graph";
    case ErrorCode::InvalidCounts: return "invalid_counts";
    case ErrorCode::InvalidSampleSize: return "invalid_sample_size";
    case ErrorCode::MalformedInput: return "malformed_input";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above, so
/// callers can branch on `code()` instead of parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

    /// True for failures produced by the model gateway rather than by local validation.
    [[nodiscard]] bool is_gateway_failure() const noexcept {
        return code_ == ErrorCode::TransportError || code_ == ErrorCode::HttpError ||
               code_ == ErrorCode::RateLimited || code_ == ErrorCode::MissingScriptEntry;
    }

private:
    ErrorCode code_;
};

} // namespace k2v
