// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace censpatial {

// Base error type. `category()` is a short machine-readable token; the CLI
// prints failures as "error: <category>: <message>" and exits nonzero.
class error : public std::runtime_error {
 public:
  error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

// Thrown when a Cholesky factorization hits a non-positive pivot.
// `pivot()` is the 0-based index of the offending diagonal entry.
class not_positive_definite : public error {
 public:
  explicit not_positive_definite(int pivot, const std::string& context = {})
      : error("numeric", context.empty()
                             ? "matrix not positive definite (pivot " +
                                   std::to_string(pivot) + ")"
                             : context + ": matrix not positive definite (pivot " +
                                   std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  int pivot() const noexcept { return pivot_; }

 private:
  int pivot_;
};

class domain_error : public error {
 public:
  explicit domain_error(const std::string& message) : error("domain", message) {}
};

class ingest_error : public error {
 public:
  explicit ingest_error(const std::string& message) : error("ingest", message) {}
};

class config_error : public error {
 public:
  explicit config_error(const std::string& message) : error("config", message) {}
};

class io_error : public error {
 public:
  explicit io_error(const std::string& message) : error("io", message) {}
};

}  // namespace censpatial
