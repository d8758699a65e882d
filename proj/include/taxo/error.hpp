#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taxo {

enum class ErrorCode {
  // corpus
  MissingField,
  DuplicateId,
  UnreadableFile,
  UnparseableSeparation,
  // keywords / lda
  EmptyCorpus,
  InvalidArgument,
  InvalidK,
  EmptyDocument,
  // llm gateway
  UnboundPlaceholder,
  ProviderUnavailable,
  Timeout,
  CacheCorruption,
  NoJsonFound,
  MalformedStructure,
  // taxonomy
  EmptyHierarchy,
  MultipleRoots,
  CycleDetected,
  OrphanEdge,
  InvalidTaxonomy,
  // tagger
  TopicMismatch,
  // evaluation
  UnknownLabel,
  MalformedLine,
  NoJudgments,
  NoTags,
  // expansion
  TooFewLeaves,
  NoPredictions,
  // pipeline
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace taxo
