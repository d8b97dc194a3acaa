#include "alignsql/error.hpp"

namespace alignsql {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::RaggedGrid: return "RaggedGrid";
    case ErrorCode::ParseMismatch: return "ParseMismatch";
    case ErrorCode::UnterminatedString: return "UnterminatedString";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::UnboundColumn: return "UnboundColumn";
    case ErrorCode::NonScalarSubquery: return "NonScalarSubquery";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingTableRef: return "DanglingTableRef";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TooFewTables: return "TooFewTables";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GoldTokenOutOfVocab: return "GoldTokenOutOfVocab";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::DecodeUnparseable: return "DecodeUnparseable";
    case ErrorCode::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

}  // namespace alignsql
