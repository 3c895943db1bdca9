#pragma once

#include <stdexcept>
#include <string>

namespace tabrec {

// Structural/domain failure with a machine-readable kind, e.g.
// "underdetermined-extent", "degenerate-fit", "non-contiguous-span".
class StructureError : public std::runtime_error {
public:
    StructureError(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

// I/O or schema failure (bad JSON, unknown field, unreadable file).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace tabrec
