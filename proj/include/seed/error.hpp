#pragma once

#include <stdexcept>
#include <string>

namespace seed {

// Process exit codes used by the CLI: 0 success, 1 validation error,
// 2 oracle failure, 3 I/O error.
enum class errc : int {
  validation = 1,
  oracle = 2,
  io = 3,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

class validation_error : public error {
 public:
  explicit validation_error(const std::string& what) : error(errc::validation, what) {}
};

// Distinct failure modes of the BEVT1 tensor file format.
enum class tensor_io_code : int {
  open_failed = 1,
  bad_magic = 2,
  truncated = 3,
  bad_dims = 4,
  size_mismatch = 5,
  write_failed = 6,
};

class io_error : public error {
 public:
  io_error(tensor_io_code code, const std::string& what)
      : error(errc::io, what), io_code_(code) {}
  explicit io_error(const std::string& what)
      : error(errc::io, what), io_code_(tensor_io_code::open_failed) {}
  tensor_io_code io_code() const { return io_code_; }

 private:
  tensor_io_code io_code_;
};

}  // namespace seed
