#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace apiprobe {

enum class ErrorCode {
    NotElf,
    NoDynamicSymbols,
    EmptyHeaderSet,
    EmptyCatalog,
    MalformedDirective,
    FileSetMismatch,
    MissingRoot,
    CatalogMismatch,
    EmptyCorpus,
    IoFailure,
    MissingCatalog,
    MissingInputs,
    SchemaVersion,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// All fatal conditions raised by the library carry one of the codes above so
// the CLI can map them to diagnostics without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    // Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace apiprobe
