#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace roadbird {

struct Node {
  int id = 0;
  double x = 0.0;  // m
  double y = 0.0;  // m
};

/// Directed road segment. Two-way roads are two opposite links.
struct Link {
  int id = 0;
  int from_node = 0;
  int to_node = 0;
  double length = 0.0;  // m
  double width = 0.0;   // drivable width, m
};

/// Ordered sequence of connected links a vehicle follows end to end.
struct Path {
  int id = 0;
  std::vector<int> links;
};

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Validated node/link/path collections before strip discretization.
struct TopologyParts {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Path> paths;
  std::vector<std::string> warnings;
};

/// Parse the three whitespace-separated topology files. Lines starting with
/// '#' and blank lines are skipped; CRLF is accepted. Throws TopologyError
/// with the offending file and line number on malformed input, duplicate
/// ids, dangling references, non-positive dimensions, or discontinuous
/// paths.
TopologyParts parse_topology(std::string_view node_text,
                             std::string_view link_text,
                             std::string_view path_text);

/// Load node.txt, link.txt and path.txt from a directory.
TopologyParts load_topology_dir(const std::filesystem::path& dir);

std::string serialize_nodes(std::span<const Node> nodes);
std::string serialize_links(std::span<const Link> links);
std::string serialize_paths(std::span<const Path> paths);

/// Number of strips that fit across a link: floor(link_width / strip_width).
/// Throws TopologyError when the result would be zero.
int strip_count(double link_width, double strip_width);

/// Immutable road topology with the per-link strip discretization applied.
/// Safe to share read-only across concurrent simulation runs.
class RoadNetwork {
 public:
  RoadNetwork(TopologyParts parts, double strip_width);

  double strip_width() const { return strip_width_; }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::span<const Path> paths() const { return paths_; }

  const Node& node(int id) const;
  const Link& link(int id) const;
  const Path& path(int id) const;
  bool has_link(int id) const { return link_index_.count(id) != 0; }

  /// Dense index of a link in links(), for per-link arrays.
  std::size_t link_index(int id) const;
  int strips(int link_id) const { return strip_counts_[link_index(link_id)]; }
  std::span<const int> strip_counts() const { return strip_counts_; }

  /// Path ids that start at the given node, sorted. Empty when none.
  const std::vector<int>& paths_from(int node_id) const;

  /// Nodes that originate at least one path, sorted by id.
  const std::vector<int>& generating_nodes() const { return generating_nodes_; }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Path> paths_;
  std::vector<int> strip_counts_;
  double strip_width_;
  std::unordered_map<int, std::size_t> node_index_;
  std::unordered_map<int, std::size_t> link_index_;
  std::unordered_map<int, std::size_t> path_index_;
  std::unordered_map<int, std::vector<int>> paths_from_node_;
  std::vector<int> generating_nodes_;
  std::vector<std::string> warnings_;
};

}  // namespace roadbird
