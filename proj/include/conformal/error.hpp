#ifndef CONFORMAL_ERROR_HPP_
#define CONFORMAL_ERROR_HPP_
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace conformal {

/// Invalid parameters or an unusable combination of inputs. Maps to CLI exit code 1.
class configuration_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Feature vector length does not match what the scorer was fitted on.
class dimension_error : public configuration_error {
  public:
    using configuration_error::configuration_error;
};

/// A mathematical operation was asked for outside its domain (e.g. delta = 0).
class domain_error : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Malformed input file. Carries the 1-based line number when known. Maps to exit code 2.
class ingestion_error : public std::runtime_error {
  public:
    ingestion_error(const std::string &source, std::size_t line, const std::string &what) :
        std::runtime_error{ source + ":" + std::to_string(line) + ": " + what },
        line_{ line } {}

    explicit ingestion_error(const std::string &what) :
        std::runtime_error{ what } {}

    /// 0 when the error is not tied to a line.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_{ 0 };
};

/// A guarantee that must hold by construction did not. Maps to exit code 3.
class invariant_violation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

}  // namespace conformal

#endif  // CONFORMAL_ERROR_HPP_
