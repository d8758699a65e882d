#include "taxo/taxonomy.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/text.hpp"

namespace taxo::taxonomy {

Taxonomy Taxonomy::with_root(std::string topic, Provenance provenance) {
  Taxonomy t;
  t.topic = topic;
  t.provenance = provenance;
  TaxonomyNode root;
  root.id = 0;
  root.label = std::move(topic);
  root.normalized_label = text::normalize_label(root.label);
  t.nodes.push_back(std::move(root));
  return t;
}

std::optional<NodeId> Taxonomy::find(std::string_view label) const {
  const auto key = text::normalize_label(label);
  for (const auto& n : nodes) {
    if (n.normalized_label == key) return n.id;
  }
  return std::nullopt;
}

std::optional<NodeId> Taxonomy::add_child(NodeId parent, std::string_view label) {
  if (parent >= nodes.size()) throw Error(ErrorCode::InvalidTaxonomy, "no such parent");
  const auto trimmed = text::trim(label);
  if (trimmed.empty() || find(trimmed)) return std::nullopt;
  TaxonomyNode n;
  n.id = static_cast<NodeId>(nodes.size());
  n.label = std::string(trimmed);
  n.normalized_label = text::normalize_label(n.label);
  n.parent = parent;
  nodes[parent].children.push_back(n.id);
  nodes.push_back(std::move(n));
  return nodes.back().id;
}

std::vector<NodeId> Taxonomy::leaves() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes) {
    if (n.id != root_id && n.children.empty()) out.push_back(n.id);
  }
  return out;
}

std::vector<NodeId> Taxonomy::internal_nodes_bfs() const {
  std::vector<NodeId> out;
  std::deque<NodeId> queue{root_id};
  while (!queue.empty()) {
    const NodeId id = queue.front();
    queue.pop_front();
    const auto& n = nodes.at(id);
    if (!n.children.empty() || id == root_id) out.push_back(id);
    for (auto c : n.children) queue.push_back(c);
  }
  return out;
}

std::size_t Taxonomy::depth(NodeId id) const {
  std::size_t d = 0;
  for (auto cur = nodes.at(id).parent; cur && d <= nodes.size(); cur = nodes.at(*cur).parent) ++d;
  return d;
}

std::vector<std::string> Taxonomy::labels() const {
  std::vector<std::string> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.label);
  return out;
}

Taxonomy Taxonomy::without_leaves(const std::set<NodeId>& removed) const {
  for (auto id : removed) {
    if (id == root_id || !is_leaf(id)) throw Error(ErrorCode::InvalidArgument, "only leaves can be removed");
  }
  std::vector<std::optional<NodeId>> remap(nodes.size());
  NodeId next = 0;
  for (const auto& n : nodes) {
    if (!removed.count(n.id)) remap[n.id] = next++;
  }
  Taxonomy t;
  t.topic = topic;
  t.provenance = provenance;
  t.root_id = *remap[root_id];
  for (const auto& n : nodes) {
    if (!remap[n.id]) continue;
    TaxonomyNode copy = n;
    copy.id = *remap[n.id];
    if (n.parent) copy.parent = *remap[*n.parent];
    copy.children.clear();
    for (auto c : n.children) {
      if (remap[c]) copy.children.push_back(*remap[c]);
    }
    t.nodes.push_back(std::move(copy));
  }
  return t;
}

std::string Taxonomy::to_json() const {
  nlohmann::ordered_json j;
  j["topic"] = topic;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& n : nodes) {
    nlohmann::ordered_json o;
    o["id"] = n.id;
    o["label"] = n.label;
    o["parent"] = n.parent ? nlohmann::ordered_json(*n.parent) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(o));
  }
  j["nodes"] = std::move(arr);
  return j.dump(2);
}

Taxonomy Taxonomy::from_json(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidTaxonomy, e.what());
  }
  Taxonomy t;
  t.provenance = Provenance::LoadedJson;
  try {
    t.topic = j.at("topic").get<std::string>();
    const auto& arr = j.at("nodes");
    std::unordered_map<std::int64_t, NodeId> dense;
    for (const auto& o : arr) {
      const auto file_id = o.at("id").get<std::int64_t>();
      if (!dense.emplace(file_id, static_cast<NodeId>(dense.size())).second) {
        throw Error(ErrorCode::InvalidTaxonomy, "duplicate node id " + std::to_string(file_id));
      }
    }
    std::optional<NodeId> root;
    for (const auto& o : arr) {
      TaxonomyNode n;
      n.id = dense.at(o.at("id").get<std::int64_t>());
      n.label = o.at("label").get<std::string>();
      n.normalized_label = text::normalize_label(n.label);
      const auto& p = o.at("parent");
      if (p.is_null()) {
        if (root) throw Error(ErrorCode::MultipleRoots, "more than one node without parent");
        root = n.id;
      } else {
        auto it = dense.find(p.get<std::int64_t>());
        if (it == dense.end()) throw Error(ErrorCode::OrphanEdge, "parent " + p.dump() + " undefined");
        n.parent = it->second;
      }
      t.nodes.push_back(std::move(n));
    }
    if (!root) throw Error(ErrorCode::InvalidTaxonomy, "no root");
    t.root_id = *root;
    for (const auto& n : t.nodes) {
      if (n.parent) t.nodes[*n.parent].children.push_back(n.id);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidTaxonomy, e.what());
  }
  const auto violations = validate(t);
  if (!violations.empty()) {
    const auto kind = violations.front().kind == ViolationKind::Cycle ? ErrorCode::CycleDetected
                                                                      : ErrorCode::InvalidTaxonomy;
    throw Error(kind, violations.front().message);
  }
  return t;
}

void Taxonomy::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, path.string());
  out << to_json() << '\n';
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------

namespace {

void place(Taxonomy& t, NodeId parent, const llm::HierarchyNode& branch, ConstructionLog* log) {
  NodeId self;
  if (auto existing = t.find(branch.label)) {
    self = *existing;
    spdlog::debug("taxonomy '{}': key '{}' repeats an existing label, merging", t.topic, branch.label);
    if (log) log->collapsed_duplicates.push_back(branch.label);
  } else if (auto added = t.add_child(parent, branch.label)) {
    self = *added;
  } else {
    // Blank key: its content hangs off the enclosing node.
    self = parent;
  }
  for (const auto& child : branch.children) place(t, self, child, log);
  for (const auto& term : branch.terms) {
    if (!t.add_child(self, term)) {
      spdlog::debug("taxonomy '{}': dropping duplicate term '{}'", t.topic, term);
      if (log) log->collapsed_duplicates.push_back(term);
    }
  }
}

}  // namespace

Taxonomy from_hierarchy_result(const std::string& topic, const llm::HierarchyResult& result,
                               ConstructionLog* log) {
  if (result.branches.empty() && result.unplaced.empty()) {
    throw Error(ErrorCode::EmptyHierarchy, "hierarchy for '" + topic + "' has no keys or terms");
  }
  Taxonomy t = Taxonomy::with_root(topic);
  for (const auto& b : result.branches) place(t, t.root_id, b, log);
  for (const auto& term : result.unplaced) {
    if (!t.add_child(t.root_id, term)) {
      spdlog::debug("taxonomy '{}': dropping duplicate unplaced term '{}'", topic, term);
      if (log) log->collapsed_duplicates.push_back(term);
    }
  }
  return t;
}

Taxonomy load_semeval_edges(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_semeval_edges(ss.str(), path.string());
}

Taxonomy parse_semeval_edges(std::string_view contents, const std::string& source) {
  struct Edge {
    std::string child;
    std::string parent;
  };
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  {
    std::istringstream in{std::string(contents)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      while (true) {
        const auto tab = line.find('\t', start);
        fields.emplace_back(text::trim(std::string_view(line).substr(start, tab == std::string::npos ? std::string::npos : tab - start)));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      rows.push_back(std::move(fields));
      line_numbers.push_back(lineno);
    }
  }
  const bool id_column = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) {
    return r.size() == 3;
  });
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::size_t first = id_column ? 1 : 0;
    if (r.size() < first + 2 || r[first].empty() || r[first + 1].empty()) {
      throw Error(ErrorCode::OrphanEdge, fmt::format("{}:{}: expected child and parent", source, line_numbers[i]));
    }
    edges.push_back({r[first], r[first + 1]});
  }
  if (edges.empty()) throw Error(ErrorCode::EmptyHierarchy, source + ": no edges");

  // Node identity is the normalized label; the first spelling is displayed.
  struct Reading {
    std::vector<std::string> order;  // normalized labels, first-seen order
    std::map<std::string, std::string> display;
    std::map<std::string, std::string> parent_of;
    std::map<std::string, std::vector<std::string>> children_of;
    std::vector<std::string> roots;
  };
  auto read = [&](bool child_first) {
    Reading rd;
    auto see = [&](const std::string& label) {
      auto key = text::normalize_label(label);
      if (rd.display.emplace(key, label).second) rd.order.push_back(key);
      return key;
    };
    for (const auto& e : edges) {
      const auto c = see(child_first ? e.child : e.parent);
      const auto p = see(child_first ? e.parent : e.child);
      if (c == p) continue;
      if (auto it = rd.parent_of.find(c); it != rd.parent_of.end()) {
        if (it->second != p) spdlog::debug("{}: '{}' has several parents, keeping '{}'", source, c, it->second);
        continue;
      }
      rd.parent_of[c] = p;
      rd.children_of[p].push_back(c);
    }
    for (const auto& n : rd.order) {
      if (!rd.parent_of.count(n)) rd.roots.push_back(n);
    }
    return rd;
  };
  Reading rd = read(true);
  if (rd.roots.size() != 1) {
    Reading flipped = read(false);
    if (flipped.roots.size() == 1) {
      spdlog::info("{}: reading edges as parent<TAB>child", source);
      rd = std::move(flipped);
    }
  }
  for (const auto& e : edges) {
    if (text::normalize_label(e.child) == text::normalize_label(e.parent)) {
      throw Error(ErrorCode::CycleDetected, source + ": self-loop on '" + e.child + "'");
    }
  }
  if (rd.roots.empty()) throw Error(ErrorCode::CycleDetected, source + ": every term has a parent");
  if (rd.roots.size() > 1) {
    throw Error(ErrorCode::MultipleRoots,
                fmt::format("{}: {} parentless terms (e.g. '{}', '{}')", source, rd.roots.size(),
                            rd.display[rd.roots[0]], rd.display[rd.roots[1]]));
  }
  Taxonomy t = Taxonomy::with_root(rd.display[rd.roots.front()], Provenance::LoadedSemeval);
  std::deque<std::pair<std::string, NodeId>> queue{{rd.roots.front(), t.root_id}};
  while (!queue.empty()) {
    auto [key, id] = queue.front();
    queue.pop_front();
    for (const auto& c : rd.children_of[key]) {
      auto added = t.add_child(id, rd.display[c]);
      if (added) queue.emplace_back(c, *added);
    }
  }
  if (t.size() != rd.order.size()) {
    throw Error(ErrorCode::CycleDetected,
                fmt::format("{}: {} term(s) unreachable from root '{}'", source,
                            rd.order.size() - t.size(), t.topic));
  }
  return t;
}

std::string to_prompt_context(const Taxonomy& taxonomy) {
  std::string out;
  for (const NodeId id : taxonomy.internal_nodes_bfs()) {
    const auto& n = taxonomy.node(id);
    std::vector<std::string> kids;
    for (auto c : n.children) kids.push_back(taxonomy.node(c).label);
    if (!out.empty()) out.push_back('\n');
    out += llm::render(llm::TemplateId::TaxonomyContext, {{"node", n.label}, {"children", kids}});
  }
  return out;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NoRoot: return "NoRoot";
    case ViolationKind::MultipleRoots: return "MultipleRoots";
    case ViolationKind::RootMismatch: return "RootMismatch";
    case ViolationKind::BadId: return "BadId";
    case ViolationKind::DanglingParent: return "DanglingParent";
    case ViolationKind::DanglingChild: return "DanglingChild";
    case ViolationKind::LinkMismatch: return "LinkMismatch";
    case ViolationKind::Cycle: return "Cycle";
    case ViolationKind::Unreachable: return "Unreachable";
    case ViolationKind::DuplicateLabel: return "DuplicateLabel";
    case ViolationKind::StaleNormalizedLabel: return "StaleNormalizedLabel";
  }
  return "Unknown";
}

std::vector<Violation> validate(const Taxonomy& t) {
  std::vector<Violation> out;
  const std::size_t n = t.nodes.size();
  auto add = [&](ViolationKind k, std::vector<NodeId> ids, std::string msg) {
    out.push_back({k, std::move(ids), std::move(msg)});
  };
  if (n == 0) {
    add(ViolationKind::NoRoot, {}, "taxonomy has no nodes");
    return out;
  }
  std::vector<bool> dangling(n, false);
  std::vector<NodeId> parentless;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = t.nodes[i];
    if (node.id != i) add(ViolationKind::BadId, {static_cast<NodeId>(i)}, fmt::format("node at {} has id {}", i, node.id));
    if (!node.parent) {
      parentless.push_back(static_cast<NodeId>(i));
    } else if (*node.parent >= n) {
      dangling[i] = true;
      add(ViolationKind::DanglingParent, {static_cast<NodeId>(i)},
          fmt::format("node {} '{}' points to missing parent {}", i, node.label, *node.parent));
    }
    for (auto c : node.children) {
      if (c >= n) {
        add(ViolationKind::DanglingChild, {static_cast<NodeId>(i)},
            fmt::format("node {} lists missing child {}", i, c));
      }
    }
    if (node.normalized_label != text::normalize_label(node.label)) {
      add(ViolationKind::StaleNormalizedLabel, {static_cast<NodeId>(i)},
          fmt::format("node {} normalized label out of date", i));
    }
  }
  if (parentless.empty()) add(ViolationKind::NoRoot, {}, "no node without parent");
  if (parentless.size() > 1) add(ViolationKind::MultipleRoots, parentless, "several nodes without parent");
  if (parentless.size() == 1 && parentless.front() != t.root_id) {
    add(ViolationKind::RootMismatch, {parentless.front(), t.root_id}, "root_id is not the parentless node");
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = t.nodes[i];
    if (node.parent && !dangling[i]) {
      const auto& siblings = t.nodes[*node.parent].children;
      if (std::find(siblings.begin(), siblings.end(), node.id) == siblings.end()) {
        add(ViolationKind::LinkMismatch, {node.id, *node.parent},
            fmt::format("node {} missing from children of its parent {}", node.id, *node.parent));
      }
    }
    for (auto c : node.children) {
      if (c >= n || dangling[c]) continue;
      if (t.nodes[c].parent != node.id) {
        add(ViolationKind::LinkMismatch, {node.id, c},
            fmt::format("node {} lists child {} whose parent differs", node.id, c));
      }
    }
  }

  if (t.root_id < n) {
    std::vector<bool> seen(n, false);
    std::deque<NodeId> queue{t.root_id};
    seen[t.root_id] = true;
    while (!queue.empty()) {
      const NodeId id = queue.front();
      queue.pop_front();
      for (auto c : t.nodes[id].children) {
        if (c < n && !seen[c]) {
          seen[c] = true;
          queue.push_back(c);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i] || dangling[i] || !t.nodes[i].parent) continue;
      // Walk parent links; returning to a visited node means a cycle.
      std::vector<bool> on_path(n, false);
      std::optional<NodeId> cur = static_cast<NodeId>(i);
      bool cycle = false;
      while (cur && *cur < n) {
        if (on_path[*cur]) {
          cycle = true;
          break;
        }
        on_path[*cur] = true;
        cur = t.nodes[*cur].parent;
      }
      add(cycle ? ViolationKind::Cycle : ViolationKind::Unreachable, {static_cast<NodeId>(i)},
          fmt::format("node {} '{}' is not reachable from the root{}", i, t.nodes[i].label,
                      cycle ? " (cycle)" : ""));
    }
  }

  std::map<std::string, NodeId> first;
  for (const auto& node : t.nodes) {
    auto [it, inserted] = first.emplace(node.normalized_label, node.id);
    if (!inserted) {
      add(ViolationKind::DuplicateLabel, {it->second, node.id},
          fmt::format("nodes {} and {} share label '{}'", it->second, node.id, node.normalized_label));
    }
  }
  return out;
}

}  // namespace taxo::taxonomy
