#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semspace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input records. Carries the 1-based line number
/// when the problem is tied to one line of a record file (0 otherwise).
class CorpusError : public Error {
 public:
  CorpusError(const std::string& file, std::size_t line, const std::string& what)
      : Error(format(file, line, what)), file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& file, std::size_t line, const std::string& what) {
    if (line == 0) return file + ": " + what;
    return file + ":" + std::to_string(line) + ": " + what;
  }

  std::string file_;
  std::size_t line_;
};

/// Binary artifact (EMB1 / LAY1) could not be read or written.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during layout optimisation.
class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : Error("diverged at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Lookup of an id that is not part of the snapshot.
class UnknownIdError : public Error {
 public:
  explicit UnknownIdError(const std::string& id) : Error("unknown id: " + id), id_(id) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace semspace
