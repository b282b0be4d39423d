#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xplore {

// Keep in sync with xplore_status in include/xplore/xplore.h.
enum class ErrorCode {
  MalformedCsv = 1,
  TypeCoercion,
  DuplicateIdentifier,
  InvalidConfig,
  UnknownTable,
  UnknownColumn,
  UnknownColumnInSynonym,
  UnknownJoinKey,
  UnknownTerm,
  BaseTableMismatch,
  BothEmpty,
  UnknownSetId,
  InvalidArgument,
  UnknownAttribute,
  TypeMismatch,
  NonCategoricalAttribute,
  EmptyExamples,
  NoNumericFeatures,
  MissingTaxonomy,
  BrokenJoinPath,
  EmptyDistribution,
  InvalidAst,
  MissingIdentifierProjection,
  SetTooLargeForInList,
  NoInterpretation,
  MissingTemplate,
  NoPathBetweenTables,
  EmptySession,
  UnknownOperator,
  StepFailure,
  EmptyGold,
  ReplayDivergence,
  UnknownVersion,
  SchemaViolation,
  UnknownSession,
  UnknownStep,
  UnknownRoute,
  ConcurrentMutation,
  EngineError,
  IoError,
  Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::string> location = std::nullopt)
      : std::runtime_error(message), code_(code), location_(std::move(location)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<std::string>& location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<std::string> location_;
};

}  // namespace xplore
