#pragma once

#include <iosfwd>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace apiprobe {

enum class Severity { Info, Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Info;
    std::string code;     // short machine-readable event name, e.g. "skip_file"
    std::string message;
    std::map<std::string, std::string> fields;
};

// Structured diagnostic stream. Every event is recorded in memory and, when a
// stream is attached, written as one JSON object per line. Thread-safe.
class Diagnostics {
public:
    Diagnostics() = default;
    explicit Diagnostics(std::ostream& out) : out_(&out) {}

    Diagnostics(const Diagnostics&) = delete;
    Diagnostics& operator=(const Diagnostics&) = delete;

    void emit(Diagnostic d);
    void info(std::string code, std::string message, std::map<std::string, std::string> fields = {});
    void warn(std::string code, std::string message, std::map<std::string, std::string> fields = {});
    void error(std::string code, std::string message, std::map<std::string, std::string> fields = {});

    std::vector<Diagnostic> events() const;
    std::size_t count(const std::string& code) const;
    std::size_t error_count() const;

    // Shared sink for callers that do not care about diagnostics.
    static Diagnostics& discard();

private:
    mutable std::mutex mu_;
    std::ostream* out_ = nullptr;
    std::vector<Diagnostic> events_;
};

std::string_view to_string(Severity s);

}  // namespace apiprobe
