#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace alignsql {

// Every failure the library reports carries one of these codes so that the
// CLI can turn it into a machine-readable error object.
enum class ErrorCode {
  // tables
  RaggedGrid,
  ParseMismatch,
  // sqlir
  UnterminatedString,
  UnknownSymbol,
  SyntaxError,
  UnsupportedConstruct,
  // executor
  UnboundColumn,
  NonScalarSubquery,
  TypeMismatch,
  // corpus
  SchemaError,
  DanglingTableRef,
  IndexOutOfRange,
  TooFewTables,
  // tensor
  ShapeMismatch,
  NotScalar,
  // model
  EmptyInput,
  GoldTokenOutOfVocab,
  // train / eval
  EmptyTrainSet,
  DecodeUnparseable,
  FractionOutOfRange,
  UnknownTemplate,
  // cli
  BadConfig,
  MissingInput,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace alignsql
