#include "taxo/error.hpp"

namespace taxo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnparseableSeparation: return "UnparseableSeparation";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::UnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::CacheCorruption: return "CacheCorruption";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::MalformedStructure: return "MalformedStructure";
    case ErrorCode::EmptyHierarchy: return "EmptyHierarchy";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::OrphanEdge: return "OrphanEdge";
    case ErrorCode::InvalidTaxonomy: return "InvalidTaxonomy";
    case ErrorCode::TopicMismatch: return "TopicMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NoJudgments: return "NoJudgments";
    case ErrorCode::NoTags: return "NoTags";
    case ErrorCode::TooFewLeaves: return "TooFewLeaves";
    case ErrorCode::NoPredictions: return "NoPredictions";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace taxo
