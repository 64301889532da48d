// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hetstar {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI's one-line error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& m) : Error("precondition", m) {}
};

class RepresentabilityError : public Error {
 public:
  explicit RepresentabilityError(const std::string& m) : Error("representability", m) {}
};

class DecodeError : public Error {
 public:
  DecodeError(std::size_t index, const std::string& m)
      : Error("decode", m + " at index " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error("data", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class SpecError : public Error {
 public:
  explicit SpecError(const std::string& m) : Error("spec", m) {}
};

class DeterminismError : public Error {
 public:
  explicit DeterminismError(const std::string& m) : Error("determinism", m) {}
};

class TrainError : public Error {
 public:
  TrainError(std::size_t sentence, const std::string& m)
      : Error("train", m + " (sentence " + std::to_string(sentence) + ")"), sentence_(sentence) {}
  std::size_t sentence() const noexcept { return sentence_; }

 private:
  std::size_t sentence_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& m)
      : Error("parse", "line " + std::to_string(line) + ": " + m), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hetstar
