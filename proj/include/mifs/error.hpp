#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mifs {

// Base of every error thrown by the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Precondition or invariant violation on caller-supplied values.
class domain_error : public error {
  public:
    using error::error;
};

// Shape/axis mismatch (non-divisible patch sides, misaligned grids).
class dimension_error : public domain_error {
  public:
    using domain_error::domain_error;
};

// Malformed binary or text input. Carries the byte offset where parsing failed.
class format_error : public error {
  public:
    format_error(const std::string& detail, std::size_t offset)
        : error(detail + " (at byte offset " + std::to_string(offset) + ")"), detail_(detail), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& detail() const noexcept { return detail_; }

    format_error with_context(const std::string& prefix) const { return {prefix + ": " + detail_, offset_}; }

  private:
    std::string detail_;
    std::size_t offset_;
};

class io_error : public error {
  public:
    using error::error;
};

} // namespace mifs
