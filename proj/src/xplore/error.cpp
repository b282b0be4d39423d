#include "xplore/error.hpp"

namespace xplore {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::TypeCoercion: return "TypeCoercion";
    case ErrorCode::DuplicateIdentifier: return "DuplicateIdentifier";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::UnknownColumnInSynonym: return "UnknownColumnInSynonym";
    case ErrorCode::UnknownJoinKey: return "UnknownJoinKey";
    case ErrorCode::UnknownTerm: return "UnknownTerm";
    case ErrorCode::BaseTableMismatch: return "BaseTableMismatch";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::UnknownSetId: return "UnknownSetId";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::NonCategoricalAttribute: return "NonCategoricalAttribute";
    case ErrorCode::EmptyExamples: return "EmptyExamples";
    case ErrorCode::NoNumericFeatures: return "NoNumericFeatures";
    case ErrorCode::MissingTaxonomy: return "MissingTaxonomy";
    case ErrorCode::BrokenJoinPath: return "BrokenJoinPath";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::InvalidAst: return "InvalidAst";
    case ErrorCode::MissingIdentifierProjection: return "MissingIdentifierProjection";
    case ErrorCode::SetTooLargeForInList: return "SetTooLargeForInList";
    case ErrorCode::NoInterpretation: return "NoInterpretation";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::NoPathBetweenTables: return "NoPathBetweenTables";
    case ErrorCode::EmptySession: return "EmptySession";
    case ErrorCode::UnknownOperator: return "UnknownOperator";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::ReplayDivergence: return "ReplayDivergence";
    case ErrorCode::UnknownVersion: return "UnknownVersion";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownStep: return "UnknownStep";
    case ErrorCode::UnknownRoute: return "UnknownRoute";
    case ErrorCode::ConcurrentMutation: return "ConcurrentMutation";
    case ErrorCode::EngineError: return "EngineError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

}  // namespace xplore
