#include "apiprobe/diagnostics.hpp"
#include "apiprobe/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <ostream>

namespace apiprobe {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotElf: return "NotElf";
        case ErrorCode::NoDynamicSymbols: return "NoDynamicSymbols";
        case ErrorCode::EmptyHeaderSet: return "EmptyHeaderSet";
        case ErrorCode::EmptyCatalog: return "EmptyCatalog";
        case ErrorCode::MalformedDirective: return "MalformedDirective";
        case ErrorCode::FileSetMismatch: return "FileSetMismatch";
        case ErrorCode::MissingRoot: return "MissingRoot";
        case ErrorCode::CatalogMismatch: return "CatalogMismatch";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::MissingCatalog: return "MissingCatalog";
        case ErrorCode::MissingInputs: return "MissingInputs";
        case ErrorCode::SchemaVersion: return "SchemaVersion";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Info: return "info";
        case Severity::Warning: return "warning";
        case Severity::Error: return "error";
    }
    return "info";
}

void Diagnostics::emit(Diagnostic d) {
    std::lock_guard lock(mu_);
    if (out_ != nullptr) {
        nlohmann::json j;
        j["severity"] = to_string(d.severity);
        j["event"] = d.code;
        j["message"] = d.message;
        for (const auto& [k, v] : d.fields) j["fields"][k] = v;
        *out_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    events_.push_back(std::move(d));
}

void Diagnostics::info(std::string code, std::string message, std::map<std::string, std::string> fields) {
    emit({Severity::Info, std::move(code), std::move(message), std::move(fields)});
}

void Diagnostics::warn(std::string code, std::string message, std::map<std::string, std::string> fields) {
    emit({Severity::Warning, std::move(code), std::move(message), std::move(fields)});
}

void Diagnostics::error(std::string code, std::string message, std::map<std::string, std::string> fields) {
    emit({Severity::Error, std::move(code), std::move(message), std::move(fields)});
}

std::vector<Diagnostic> Diagnostics::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

std::size_t Diagnostics::count(const std::string& code) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const Diagnostic& d) { return d.code == code; }));
}

std::size_t Diagnostics::error_count() const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::count_if(
        events_.begin(), events_.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; }));
}

Diagnostics& Diagnostics::discard() {
    // Events still accumulate here; callers that pass nothing never read them,
    // so cap growth by dropping the backlog periodically.
    static thread_local Diagnostics sink;
    {
        std::lock_guard lock(sink.mu_);
        if (sink.events_.size() > 4096) sink.events_.clear();
    }
    return sink;
}

}  // namespace apiprobe
