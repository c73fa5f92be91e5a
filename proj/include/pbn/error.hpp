#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pbn {

/// Coarse error classes; each maps onto one CLI exit code.
enum class ErrorCategory {
  syntax,               // exit 1
  semantic,             // exit 2
  impossible_evidence,  // exit 3
  resource,             // exit 4
};

inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::syntax: return 1;
    case ErrorCategory::semantic: return 2;
    case ErrorCategory::impossible_evidence: return 3;
    case ErrorCategory::resource: return 4;
  }
  return 2;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Malformed text. `offset` is a byte offset; line/column are 1-based and
/// zero when unknown.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset, std::size_t line = 0,
              std::size_t column = 0)
      : Error(ErrorCategory::syntax, decorate(what, offset, line, column)),
        offset_(offset), line_(line), column_(column) {}
  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string decorate(const std::string& what, std::size_t offset,
                              std::size_t line, std::size_t column) {
    if (line > 0)
      return "syntax error at line " + std::to_string(line) + ", column " +
             std::to_string(column) + ": " + what;
    return "syntax error at offset " + std::to_string(offset) + ": " + what;
  }
  std::size_t offset_, line_, column_;
};

class DuplicateVariableError : public SyntaxError {
 public:
  DuplicateVariableError(const std::string& variable, std::size_t offset)
      : SyntaxError("variable '" + variable + "' used more than once", offset),
        variable_(variable) {}
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

/// Unresolved variable, state or function name.
class NameError : public Error {
 public:
  explicit NameError(const std::string& what)
      : Error(ErrorCategory::semantic, what) {}
};

/// Variable missing from (or misused against) a factor scope.
class ScopeError : public Error {
 public:
  explicit ScopeError(const std::string& what)
      : Error(ErrorCategory::semantic, what) {}
};

class DomainMismatchError : public Error {
 public:
  explicit DomainMismatchError(const std::string& variable)
      : Error(ErrorCategory::semantic,
              "variable '" + variable + "' has different domains in the two operands"),
        variable_(variable) {}
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

class ZeroMassError : public Error {
 public:
  explicit ZeroMassError(const std::string& what = "factor has zero total mass")
      : Error(ErrorCategory::impossible_evidence, what) {}
};

class ImpossibleEvidenceError : public ZeroMassError {
 public:
  explicit ImpossibleEvidenceError(const std::string& what = "impossible evidence: P(evidence) = 0")
      : ZeroMassError(what) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what)
      : Error(ErrorCategory::resource, what) {}
};

/// Structural or numeric defect of a model or document (bad CPT, cycle, schema).
class SemanticError : public Error {
 public:
  explicit SemanticError(const std::string& what)
      : Error(ErrorCategory::semantic, what) {}
};

class CycleError : public SemanticError {
 public:
  explicit CycleError(std::vector<std::string> cycle)
      : SemanticError("directed cycle: " + render(cycle)), cycle_(std::move(cycle)) {}
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  static std::string render(const std::vector<std::string>& c) {
    std::string s;
    for (const auto& n : c) s += n + " -> ";
    if (!c.empty()) s += c.front();
    return s;
  }
  std::vector<std::string> cycle_;
};

class SchemaError : public SemanticError {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : SemanticError("schema error at " + path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace pbn
