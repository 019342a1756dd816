#include "roadbird/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace roadbird {

namespace {

// Tokenized non-comment line with its 1-based source line number.
struct Record {
  int line_no;
  std::vector<std::string> fields;
};

std::vector<Record> tokenize(std::string_view text) {
  std::vector<Record> records;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    ++line_no;
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) fields.emplace_back(line.substr(start, i - start));
    }
    if (fields.empty()) continue;
    if (fields.front().front() == '#') continue;
    records.push_back({line_no, std::move(fields)});
  }
  return records;
}

[[noreturn]] void fail(std::string_view file, int line, std::string_view what) {
  throw TopologyError(fmt::format("{}:{}: {}", file, line, what));
}

int parse_int(std::string_view file, int line, const std::string& s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(file, line, fmt::format("expected integer, got '{}'", s));
  return value;
}

double parse_double(std::string_view file, int line, const std::string& s) {
  try {
    std::size_t used = 0;
    double value = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    fail(file, line, fmt::format("expected number, got '{}'", s));
  }
}

}  // namespace

TopologyParts parse_topology(std::string_view node_text,
                             std::string_view link_text,
                             std::string_view path_text) {
  TopologyParts parts;

  std::set<int> node_ids;
  for (const Record& rec : tokenize(node_text)) {
    if (rec.fields.size() != 3)
      fail("node.txt", rec.line_no, "expected '<id> <x> <y>'");
    Node n;
    n.id = parse_int("node.txt", rec.line_no, rec.fields[0]);
    n.x = parse_double("node.txt", rec.line_no, rec.fields[1]);
    n.y = parse_double("node.txt", rec.line_no, rec.fields[2]);
    if (!node_ids.insert(n.id).second)
      fail("node.txt", rec.line_no, fmt::format("duplicate node id {}", n.id));
    parts.nodes.push_back(n);
  }

  std::set<int> link_ids;
  for (const Record& rec : tokenize(link_text)) {
    if (rec.fields.size() != 5)
      fail("link.txt", rec.line_no,
           "expected '<id> <from> <to> <length> <width>'");
    Link l;
    l.id = parse_int("link.txt", rec.line_no, rec.fields[0]);
    l.from_node = parse_int("link.txt", rec.line_no, rec.fields[1]);
    l.to_node = parse_int("link.txt", rec.line_no, rec.fields[2]);
    l.length = parse_double("link.txt", rec.line_no, rec.fields[3]);
    l.width = parse_double("link.txt", rec.line_no, rec.fields[4]);
    if (!link_ids.insert(l.id).second)
      fail("link.txt", rec.line_no, fmt::format("duplicate link id {}", l.id));
    if (l.from_node == l.to_node)
      fail("link.txt", rec.line_no,
           fmt::format("link {} is a self-loop at node {}", l.id, l.from_node));
    if (!node_ids.count(l.from_node))
      fail("link.txt", rec.line_no,
           fmt::format("link {} references unknown node {}", l.id, l.from_node));
    if (!node_ids.count(l.to_node))
      fail("link.txt", rec.line_no,
           fmt::format("link {} references unknown node {}", l.id, l.to_node));
    if (!(l.length > 0.0))
      fail("link.txt", rec.line_no,
           fmt::format("link {} has non-positive length", l.id));
    if (!(l.width > 0.0))
      fail("link.txt", rec.line_no,
           fmt::format("link {} has non-positive width", l.id));
    parts.links.push_back(l);
  }

  std::unordered_map<int, const Link*> link_by_id;
  for (const Link& l : parts.links) link_by_id[l.id] = &l;

  std::set<int> path_ids;
  for (const Record& rec : tokenize(path_text)) {
    if (rec.fields.size() < 2)
      fail("path.txt", rec.line_no, "expected '<id> <link_id>...'");
    Path p;
    p.id = parse_int("path.txt", rec.line_no, rec.fields[0]);
    if (!path_ids.insert(p.id).second)
      fail("path.txt", rec.line_no, fmt::format("duplicate path id {}", p.id));
    for (std::size_t i = 1; i < rec.fields.size(); ++i) {
      int link_id = parse_int("path.txt", rec.line_no, rec.fields[i]);
      if (!link_by_id.count(link_id))
        fail("path.txt", rec.line_no,
             fmt::format("path {} references unknown link {}", p.id, link_id));
      p.links.push_back(link_id);
    }
    for (std::size_t i = 0; i + 1 < p.links.size(); ++i) {
      const Link* a = link_by_id[p.links[i]];
      const Link* b = link_by_id[p.links[i + 1]];
      if (a->to_node != b->from_node)
        fail("path.txt", rec.line_no,
             fmt::format("discontinuous path {}: link {} ends at node {} but "
                         "link {} starts at node {}",
                         p.id, a->id, a->to_node, b->id, b->from_node));
    }
    parts.paths.push_back(std::move(p));
  }

  if (parts.paths.empty())
    parts.warnings.push_back(
        "no paths defined: vehicle generation is impossible");

  std::sort(parts.nodes.begin(), parts.nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  std::sort(parts.links.begin(), parts.links.end(),
            [](const Link& a, const Link& b) { return a.id < b.id; });
  std::sort(parts.paths.begin(), parts.paths.end(),
            [](const Path& a, const Path& b) { return a.id < b.id; });
  return parts;
}

namespace {
std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw TopologyError(fmt::format("cannot open {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TopologyParts load_topology_dir(const std::filesystem::path& dir) {
  return parse_topology(read_file(dir / "node.txt"), read_file(dir / "link.txt"),
                        read_file(dir / "path.txt"));
}

std::string serialize_nodes(std::span<const Node> nodes) {
  std::string out;
  for (const Node& n : nodes) out += fmt::format("{} {:.6f} {:.6f}\n", n.id, n.x, n.y);
  return out;
}

std::string serialize_links(std::span<const Link> links) {
  std::string out;
  for (const Link& l : links)
    out += fmt::format("{} {} {} {:.6f} {:.6f}\n", l.id, l.from_node, l.to_node,
                       l.length, l.width);
  return out;
}

std::string serialize_paths(std::span<const Path> paths) {
  std::string out;
  for (const Path& p : paths) {
    out += fmt::format("{}", p.id);
    for (int link_id : p.links) out += fmt::format(" {}", link_id);
    out += '\n';
  }
  return out;
}

int strip_count(double link_width, double strip_width) {
  if (!(link_width > 0.0) || !(strip_width > 0.0))
    throw TopologyError("strip_count requires positive widths");
  // Nudge the quotient so exact multiples stored in binary (7.5/2.5,
  // 8.4/1.2, ...) are not floored one short.
  const int count = static_cast<int>(std::floor(link_width / strip_width + 1e-9));
  if (count < 1)
    throw TopologyError(
        fmt::format("link width {} is narrower than one strip of {}",
                    link_width, strip_width));
  return count;
}

RoadNetwork::RoadNetwork(TopologyParts parts, double strip_width)
    : nodes_(std::move(parts.nodes)),
      links_(std::move(parts.links)),
      paths_(std::move(parts.paths)),
      strip_width_(strip_width),
      warnings_(std::move(parts.warnings)) {
  if (!(strip_width > 0.0))
    throw TopologyError("strip width must be positive");

  strip_counts_.reserve(links_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    try {
      strip_counts_.push_back(strip_count(l.width, strip_width));
    } catch (const TopologyError& e) {
      throw TopologyError(fmt::format("link {}: {}", l.id, e.what()));
    }
    link_index_[l.id] = i;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_[nodes_[i].id] = i;
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    path_index_[paths_[i].id] = i;
    const Link& first = link(paths_[i].links.front());
    paths_from_node_[first.from_node].push_back(paths_[i].id);
  }
  for (auto& [node_id, ids] : paths_from_node_) {
    std::sort(ids.begin(), ids.end());
    generating_nodes_.push_back(node_id);
  }
  std::sort(generating_nodes_.begin(), generating_nodes_.end());
}

const Node& RoadNetwork::node(int id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end())
    throw TopologyError(fmt::format("unknown node id {}", id));
  return nodes_[it->second];
}

const Link& RoadNetwork::link(int id) const {
  auto it = link_index_.find(id);
  if (it == link_index_.end())
    throw TopologyError(fmt::format("unknown link id {}", id));
  return links_[it->second];
}

const Path& RoadNetwork::path(int id) const {
  auto it = path_index_.find(id);
  if (it == path_index_.end())
    throw TopologyError(fmt::format("unknown path id {}", id));
  return paths_[it->second];
}

std::size_t RoadNetwork::link_index(int id) const {
  auto it = link_index_.find(id);
  if (it == link_index_.end())
    throw TopologyError(fmt::format("unknown link id {}", id));
  return it->second;
}

const std::vector<int>& RoadNetwork::paths_from(int node_id) const {
  static const std::vector<int> empty;
  auto it = paths_from_node_.find(node_id);
  return it == paths_from_node_.end() ? empty : it->second;
}

}  // namespace roadbird
