#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "rbi/matrix.hpp"

namespace rbi {

/// Malformed Matrix Market input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Reads real coordinate or array Matrix Market data. Symmetric and
/// skew-symmetric storage is expanded; duplicate coordinates are summed.
/// The result is sparse (CSR + CSC).
Matrix read_matrix_market(std::istream& in);
Matrix read_matrix_market(const std::filesystem::path& path);

/// Writes "coordinate real general" with round-trip precision.
void write_matrix_market(std::ostream& out, const Matrix& a);
void write_matrix_market(const std::filesystem::path& path, const Matrix& a);

}  // namespace rbi
