#include "transtte/road_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "transtte/csv.hpp"
#include "transtte/error.hpp"

namespace transtte {

namespace {

void build_csr(std::size_t node_count, const std::vector<std::size_t>& keys,
               std::vector<std::uint32_t>& offsets, std::vector<std::uint32_t>& list) {
  offsets.assign(node_count + 1, 0);
  for (std::size_t k : keys) ++offsets[k + 1];
  for (std::size_t i = 0; i < node_count; ++i) offsets[i + 1] += offsets[i];
  list.assign(keys.size(), 0);
  std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t s = 0; s < keys.size(); ++s) {
    list[fill[keys[s]]++] = static_cast<std::uint32_t>(s);
  }
}

std::vector<std::string> read_schema_features(const std::filesystem::path& schema_path) {
  std::ifstream in(schema_path);
  if (!in) throw Error(ErrorKind::MissingFile, schema_path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaViolation, schema_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(ErrorKind::SchemaViolation,
                schema_path.string() + ": expected {\"features\": [...]}");
  }
  std::vector<std::string> names;
  for (const auto& f : doc["features"]) {
    if (!f.is_string()) {
      throw Error(ErrorKind::SchemaViolation, schema_path.string() + ": feature names must be strings");
    }
    names.push_back(f.get<std::string>());
  }
  return names;
}

}  // namespace

RoadNetwork RoadNetwork::build(std::vector<Node> nodes, std::vector<Segment> segments,
                               std::vector<std::string> feature_names) {
  RoadNetwork net;
  std::sort(nodes.begin(), nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0 && nodes[i].id == nodes[i - 1].id) {
      throw Error(ErrorKind::SchemaViolation, "duplicate node_id " + std::to_string(nodes[i].id.value));
    }
    if (!std::isfinite(nodes[i].lat) || !std::isfinite(nodes[i].lon) ||
        std::abs(nodes[i].lat) > 90.0 || std::abs(nodes[i].lon) > 180.0) {
      throw Error(ErrorKind::SchemaViolation,
                  "node " + std::to_string(nodes[i].id.value) + " has invalid coordinates");
    }
    net.node_lookup_.emplace(nodes[i].id, i);
  }
  net.nodes_ = std::move(nodes);
  net.feature_names_ = std::move(feature_names);

  net.seg_from_.reserve(segments.size());
  net.seg_to_.reserve(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    const std::string label = "segment " + std::to_string(seg.id.value);
    if (!net.segment_lookup_.emplace(seg.id, s).second) {
      throw Error(ErrorKind::SchemaViolation, "duplicate edge_id " + std::to_string(seg.id.value));
    }
    if (!(seg.length_m > 0.0) || !std::isfinite(seg.length_m)) {
      throw Error(ErrorKind::SchemaViolation, label + ": length must be > 0");
    }
    if (!(seg.speed_kmh > 0.0) || !std::isfinite(seg.speed_kmh)) {
      throw Error(ErrorKind::SchemaViolation, label + ": speed must be > 0");
    }
    if (seg.features.size() != net.feature_names_.size()) {
      throw Error(ErrorKind::SchemaViolation, label + ": expected " +
                                                  std::to_string(net.feature_names_.size()) +
                                                  " features");
    }
    auto from = net.node_index(seg.from);
    auto to = net.node_index(seg.to);
    if (!from || !to) {
      throw Error(ErrorKind::DanglingEndpoint,
                  label + " references unknown node " +
                      std::to_string((from ? seg.to : seg.from).value));
    }
    net.seg_from_.push_back(*from);
    net.seg_to_.push_back(*to);
  }
  net.segments_ = std::move(segments);
  build_csr(net.nodes_.size(), net.seg_from_, net.out_offsets_, net.out_list_);
  build_csr(net.nodes_.size(), net.seg_to_, net.in_offsets_, net.in_list_);
  return net;
}

std::optional<std::size_t> RoadNetwork::node_index(NodeId id) const {
  auto it = node_lookup_.find(id);
  if (it == node_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> RoadNetwork::segment_index(SegmentId id) const {
  auto it = segment_lookup_.find(id);
  if (it == segment_lookup_.end()) return std::nullopt;
  return it->second;
}

std::span<const std::uint32_t> RoadNetwork::out_segments(std::size_t node) const {
  return std::span<const std::uint32_t>(out_list_).subspan(
      out_offsets_[node], out_offsets_[node + 1] - out_offsets_[node]);
}

std::span<const std::uint32_t> RoadNetwork::in_segments(std::size_t node) const {
  return std::span<const std::uint32_t>(in_list_).subspan(
      in_offsets_[node], in_offsets_[node + 1] - in_offsets_[node]);
}

RoadNetwork load_network(const std::filesystem::path& nodes_path,
                         const std::filesystem::path& edges_path) {
  const csv::Table node_table = csv::read_file(nodes_path);
  const std::vector<std::string> node_header{"node_id", "lat", "lon"};
  if (node_table.header != node_header) {
    throw Error(ErrorKind::SchemaViolation, nodes_path.string() + ": header must be node_id,lat,lon");
  }
  std::vector<Node> nodes;
  nodes.reserve(node_table.rows.size());
  for (const auto& row : node_table.rows) {
    const std::string where = nodes_path.string() + ":" + std::to_string(row.line);
    nodes.push_back(Node{NodeId{csv::parse_int(row.fields[0], where)},
                         csv::parse_double(row.fields[1], where),
                         csv::parse_double(row.fields[2], where)});
  }

  const csv::Table edge_table = csv::read_file(edges_path);
  const std::vector<std::string> fixed{"edge_id", "from_node", "to_node", "length_m", "speed_kmh"};
  if (edge_table.header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), edge_table.header.begin())) {
    throw Error(ErrorKind::SchemaViolation,
                edges_path.string() + ": header must start with edge_id,from_node,to_node,length_m,speed_kmh");
  }
  const std::size_t k = edge_table.header.size() - fixed.size();
  for (std::size_t f = 0; f < k; ++f) {
    if (edge_table.header[fixed.size() + f] != "feat_" + std::to_string(f)) {
      throw Error(ErrorKind::SchemaViolation,
                  edges_path.string() + ": feature column " + std::to_string(f) + " must be named feat_" +
                      std::to_string(f));
    }
  }
  std::vector<std::string> feature_names;
  const auto schema_path = edges_path.parent_path() / "schema.json";
  if (std::filesystem::exists(schema_path)) {
    feature_names = read_schema_features(schema_path);
    if (feature_names.size() != k) {
      throw Error(ErrorKind::SchemaViolation,
                  schema_path.string() + " declares " + std::to_string(feature_names.size()) +
                      " features but edges.csv has " + std::to_string(k));
    }
  } else {
    feature_names.assign(edge_table.header.begin() + fixed.size(), edge_table.header.end());
  }

  std::vector<Segment> segments;
  segments.reserve(edge_table.rows.size());
  for (const auto& row : edge_table.rows) {
    const std::string where = edges_path.string() + ":" + std::to_string(row.line);
    Segment seg;
    seg.id = SegmentId{csv::parse_int(row.fields[0], where)};
    seg.from = NodeId{csv::parse_int(row.fields[1], where)};
    seg.to = NodeId{csv::parse_int(row.fields[2], where)};
    seg.length_m = csv::parse_double(row.fields[3], where);
    seg.speed_kmh = csv::parse_double(row.fields[4], where);
    seg.features.reserve(k);
    for (std::size_t f = 0; f < k; ++f) {
      seg.features.push_back(csv::parse_double(row.fields[fixed.size() + f], where));
    }
    segments.push_back(std::move(seg));
  }
  return RoadNetwork::build(std::move(nodes), std::move(segments), std::move(feature_names));
}

std::vector<Degree> degrees(const RoadNetwork& network) {
  std::vector<Degree> out(network.node_count());
  for (std::size_t i = 0; i < network.node_count(); ++i) {
    out[i].in = static_cast<std::uint32_t>(network.in_segments(i).size());
    out[i].out = static_cast<std::uint32_t>(network.out_segments(i).size());
  }
  return out;
}

RouteGraph route_subgraph(const RoadNetwork& network, std::span<const SegmentId> path) {
  RouteGraph g;
  g.network = &network;
  g.segment_ids.assign(path.begin(), path.end());
  g.segments.reserve(path.size());
  for (SegmentId id : path) {
    auto idx = network.segment_index(id);
    if (!idx) throw Error(ErrorKind::UnknownSegment, "segment " + std::to_string(id.value));
    g.segments.push_back(*idx);
  }
  g.adjacency.assign(path.size(), {});
  for (std::size_t k = 0; k + 1 < g.segments.size(); ++k) {
    if (network.to_index(g.segments[k]) != network.from_index(g.segments[k + 1])) {
      throw Error(ErrorKind::BrokenChain, "segments " + std::to_string(path[k].value) + " and " +
                                              std::to_string(path[k + 1].value) +
                                              " do not share a node");
    }
    const auto a = static_cast<std::uint32_t>(k);
    g.adjacency[k].push_back(a + 1);
    g.adjacency[k + 1].push_back(a);
  }
  return g;
}

}  // namespace transtte
