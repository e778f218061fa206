#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "transtte/ids.hpp"

namespace transtte {

struct Node {
  NodeId id;
  double lat = 0.0;
  double lon = 0.0;
};

struct Segment {
  SegmentId id;
  NodeId from;
  NodeId to;
  double length_m = 0.0;
  double speed_kmh = 0.0;
  std::vector<double> features;

  /// Free-flow traversal time in seconds.
  double base_time_s() const { return length_m / (speed_kmh / 3.6); }
};

struct Degree {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  bool operator==(const Degree&) const = default;
};

/// Directed road network. Nodes are stored sorted by id, so dense node
/// indices follow id order; segments keep their input order. Immutable after
/// construction.
class RoadNetwork {
 public:
  /// Validates and indexes. Throws SchemaViolation on duplicate ids, bad
  /// lengths/speeds or ragged feature vectors, DanglingEndpoint on segments
  /// whose endpoints are not in `nodes`.
  static RoadNetwork build(std::vector<Node> nodes, std::vector<Segment> segments,
                           std::vector<std::string> feature_names);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t segment_count() const { return segments_.size(); }
  std::size_t feature_count() const { return feature_names_.size(); }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Segment> segments() const { return segments_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  const Node& node(std::size_t index) const { return nodes_[index]; }
  const Segment& segment(std::size_t index) const { return segments_[index]; }

  std::optional<std::size_t> node_index(NodeId id) const;
  std::optional<std::size_t> segment_index(SegmentId id) const;

  std::size_t from_index(std::size_t segment) const { return seg_from_[segment]; }
  std::size_t to_index(std::size_t segment) const { return seg_to_[segment]; }

  /// Segment indices leaving / entering a node (by dense node index).
  std::span<const std::uint32_t> out_segments(std::size_t node) const;
  std::span<const std::uint32_t> in_segments(std::size_t node) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Segment> segments_;
  std::vector<std::string> feature_names_;
  std::unordered_map<NodeId, std::size_t> node_lookup_;
  std::unordered_map<SegmentId, std::size_t> segment_lookup_;
  std::vector<std::size_t> seg_from_;
  std::vector<std::size_t> seg_to_;
  // CSR adjacency
  std::vector<std::uint32_t> out_offsets_, out_list_;
  std::vector<std::uint32_t> in_offsets_, in_list_;
};

/// Loads nodes.csv and edges.csv. Feature column names come from a
/// `schema.json` next to edges.csv when present (`{"features": [...]}`),
/// otherwise from the trailing edges.csv header columns.
RoadNetwork load_network(const std::filesystem::path& nodes_path,
                         const std::filesystem::path& edges_path);

/// Per-node degrees, indexed by dense node index.
std::vector<Degree> degrees(const RoadNetwork& network);

using AdjacencyList = std::vector<std::vector<std::uint32_t>>;

/// A trip path viewed as a graph whose nodes are the path's segments in order.
/// Consecutive segments are linked in both directions.
struct RouteGraph {
  const RoadNetwork* network = nullptr;
  std::vector<SegmentId> segment_ids;
  std::vector<std::size_t> segments;  // dense segment indices
  AdjacencyList adjacency;

  std::size_t node_count() const { return segments.size(); }
};

/// Throws UnknownSegment or BrokenChain.
RouteGraph route_subgraph(const RoadNetwork& network, std::span<const SegmentId> path);

}  // namespace transtte
