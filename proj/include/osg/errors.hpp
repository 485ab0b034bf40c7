#pragma once

#include <stdexcept>
#include <string>

namespace osg {

// Error categories exposed on the CLI for scriptability.
enum class ErrorCategory { configuration, format, numerical, sequencing };

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::configuration: return "configuration";
        case ErrorCategory::format: return "format";
        case ErrorCategory::numerical: return "numerical";
        case ErrorCategory::sequencing: return "sequencing";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

inline Error config_error(const std::string& msg) { return Error(ErrorCategory::configuration, msg); }
inline Error format_error(const std::string& msg) { return Error(ErrorCategory::format, msg); }
inline Error numerical_error(const std::string& msg) { return Error(ErrorCategory::numerical, msg); }
inline Error sequencing_error(const std::string& msg) { return Error(ErrorCategory::sequencing, msg); }

}  // namespace osg
