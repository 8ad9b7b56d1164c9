#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace turnkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `byte_offset` points at the first offending byte.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Two grids or rasters that must share a sampling frame do not.
class FrameMismatch : public Error {
 public:
  using Error::Error;
};

class VoxelizationError : public Error {
 public:
  using Error::Error;
};

/// A geometric guarantee that upstream code is supposed to maintain was broken.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace turnkit
