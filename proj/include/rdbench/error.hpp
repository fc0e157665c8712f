#pragma once

#include <stdexcept>
#include <string>

namespace rdbench {

// Input or configuration rejected before any work started. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / stream failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file content (headers, JSON, bitstreams).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// An external tool failed (spawn, timeout, bad exit, missing output). CLI exit code 2.
class ToolError : public std::runtime_error {
 public:
  explicit ToolError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rdbench
