#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taxo/llm.hpp"

namespace taxo::taxonomy {

using NodeId = std::uint32_t;

struct TaxonomyNode {
  NodeId id = 0;
  std::string label;
  std::string normalized_label;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
};

enum class Provenance { Constructed, LoadedSemeval, LoadedJson };

/// Rooted labeled tree; node ids are dense indices into `nodes`. Members are
/// public so tests can inject corruption for validate().
struct Taxonomy {
  NodeId root_id = 0;
  std::string topic;
  std::vector<TaxonomyNode> nodes;
  Provenance provenance = Provenance::Constructed;

  static Taxonomy with_root(std::string topic, Provenance provenance = Provenance::Constructed);

  /// Appends a child; returns nullopt (and adds nothing) when the normalized
  /// label already exists.
  std::optional<NodeId> add_child(NodeId parent, std::string_view label);
  std::optional<NodeId> find(std::string_view label) const;

  const TaxonomyNode& root() const { return nodes.at(root_id); }
  const TaxonomyNode& node(NodeId id) const { return nodes.at(id); }
  std::size_t size() const { return nodes.size(); }
  bool is_leaf(NodeId id) const { return nodes.at(id).children.empty(); }
  /// Non-root nodes without children, in id order.
  std::vector<NodeId> leaves() const;
  std::vector<NodeId> internal_nodes_bfs() const;
  std::size_t depth(NodeId id) const;
  std::vector<std::string> labels() const;

  /// Copy without the given leaves; remaining ids are re-densified in order.
  Taxonomy without_leaves(const std::set<NodeId>& removed) const;

  /// {topic, nodes: [{id, label, parent}]}, parent null for the root.
  std::string to_json() const;
  static Taxonomy from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static Taxonomy load(const std::filesystem::path& path);
};

struct ConstructionLog {
  std::vector<std::string> collapsed_duplicates;
};

/// Keys become internal nodes under their enclosing node, listed terms become
/// leaves, unplaced terms hang off the root. A repeated normalized label keeps
/// its first placement: a repeated key merges into the first node, a repeated
/// term is dropped.
Taxonomy from_hierarchy_result(const std::string& topic, const llm::HierarchyResult& result,
                               ConstructionLog* log = nullptr);

/// `child<TAB>parent` lines (or `id<TAB>child<TAB>parent`, detected when every
/// line has three columns). Orientation flips to parent-first when only that
/// reading yields a single root. A node listed under two parents keeps the
/// first.
Taxonomy load_semeval_edges(const std::filesystem::path& path);
Taxonomy parse_semeval_edges(std::string_view contents, const std::string& source = "<memory>");

/// One `Childs of <label>: [a,b]` line per internal node, breadth-first from
/// the root, joined by '\n'. A childless root yields `Childs of <root>: []`.
std::string to_prompt_context(const Taxonomy& taxonomy);

enum class ViolationKind {
  NoRoot,
  MultipleRoots,
  RootMismatch,
  BadId,
  DanglingParent,
  DanglingChild,
  LinkMismatch,
  Cycle,
  Unreachable,
  DuplicateLabel,
  StaleNormalizedLabel,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<NodeId> nodes;
  std::string message;
};

/// Empty when the taxonomy is a well-formed tree with unique labels.
std::vector<Violation> validate(const Taxonomy& taxonomy);

}  // namespace taxo::taxonomy
