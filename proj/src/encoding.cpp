#include "transtte/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "transtte/error.hpp"

namespace transtte {

SpatialEncodingTable shortest_hop_distances(const AdjacencyList& adjacency, std::uint16_t max_hops) {
  if (adjacency.empty()) throw Error(ErrorKind::EmptyGraph, "route graph has no nodes");
  if (max_hops < 1 || max_hops >= kUnreachableHop - 1) {
    throw Error(ErrorKind::InvalidConfig, "max_hops out of range: " + std::to_string(max_hops));
  }
  SpatialEncodingTable table;
  table.n = adjacency.size();
  table.max_hops = max_hops;
  table.phi.resize(table.n * table.n);
  kernels::all_pairs_hops(adjacency, max_hops, table.phi);
  const std::uint16_t unreachable = table.unreachable();
  for (auto& v : table.phi) {
    if (v == kUnreachableHop) v = unreachable;
  }
  return table;
}

SpatialEncodingTable shortest_hop_distances(const RouteGraph& graph, std::uint16_t max_hops) {
  return shortest_hop_distances(graph.adjacency, max_hops);
}

CentralityIndices centrality_indices(const RouteGraph& graph, const RoadNetwork& network,
                                     std::uint16_t max_degree) {
  if (max_degree < 1) throw Error(ErrorKind::InvalidConfig, "max_degree must be >= 1");
  CentralityIndices out;
  out.in_bucket.reserve(graph.node_count());
  out.out_bucket.reserve(graph.node_count());
  for (std::size_t seg : graph.segments) {
    const std::size_t in_deg = network.in_segments(network.from_index(seg)).size();
    const std::size_t out_deg = network.out_segments(network.to_index(seg)).size();
    out.in_bucket.push_back(static_cast<std::uint16_t>(std::min<std::size_t>(in_deg, max_degree)));
    out.out_bucket.push_back(static_cast<std::uint16_t>(std::min<std::size_t>(out_deg, max_degree)));
  }
  return out;
}

std::size_t EncodingCache::KeyHash::operator()(const Key& k) const noexcept {
  // FNV-1a over the id sequence
  std::uint64_t h = 1469598103934665603ULL ^ k.max_hops;
  for (SegmentId id : k.path) {
    auto v = static_cast<std::uint64_t>(id.value);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

std::shared_ptr<const SpatialEncodingTable> EncodingCache::get_or_compute(
    std::span<const SegmentId> path, const RouteGraph& graph, std::uint16_t max_hops) {
  Key key{max_hops, std::vector<SegmentId>(path.begin(), path.end())};
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.lru);
      hits_.fetch_add(1, std::memory_order_relaxed);
      return it->second.table;
    }
  }
  misses_.fetch_add(1, std::memory_order_relaxed);
  auto table = std::make_shared<const SpatialEncodingTable>(shortest_hop_distances(graph, max_hops));

  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    it->second.table = table;
    lru_.splice(lru_.begin(), lru_, it->second.lru);
    return table;
  }
  lru_.push_front(key);
  entries_.emplace(std::move(key), Entry{table, lru_.begin()});
  if (max_entries_ > 0 && entries_.size() > max_entries_) {
    entries_.erase(lru_.back());
    lru_.pop_back();
  }
  return table;
}

std::size_t EncodingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void EncodingCache::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
  lru_.clear();
}

std::array<double, kTimeFeatures> time_features(std::int64_t unix_seconds) {
  constexpr std::int64_t kDay = 86400;
  std::int64_t days = unix_seconds / kDay;
  std::int64_t sec_of_day = unix_seconds % kDay;
  if (sec_of_day < 0) {
    sec_of_day += kDay;
    --days;
  }
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  const std::int64_t dow = ((days + 3) % 7 + 7) % 7;
  std::array<double, kTimeFeatures> out{};
  out[0] = static_cast<double>(sec_of_day) / 3600.0 / 24.0;
  out[1 + static_cast<std::size_t>(dow)] = 1.0;
  return out;
}

FeatureScaler FeatureScaler::fit(const RoadNetwork& network) {
  const std::size_t k = network.feature_count();
  FeatureScaler s;
  s.mean.assign(k, 0.0);
  s.scale.assign(k, 1.0);
  const auto m = static_cast<double>(network.segment_count());
  if (network.segment_count() == 0) return s;
  for (const auto& seg : network.segments()) {
    for (std::size_t f = 0; f < k; ++f) s.mean[f] += seg.features[f];
  }
  for (auto& v : s.mean) v /= m;
  std::vector<double> var(k, 0.0);
  for (const auto& seg : network.segments()) {
    for (std::size_t f = 0; f < k; ++f) {
      const double d = seg.features[f] - s.mean[f];
      var[f] += d * d;
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    const double sd = std::sqrt(var[f] / m);
    s.scale[f] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

RouteEncoder::RouteEncoder(const RoadNetwork& network, std::uint16_t max_hops,
                           std::uint16_t max_degree, std::size_t cache_entries)
    : network_(&network),
      max_hops_(max_hops),
      max_degree_(max_degree),
      scaler_(FeatureScaler::fit(network)),
      cache_(cache_entries) {}

EncodedRoute RouteEncoder::encode(std::span<const SegmentId> path, std::int64_t depart_ts) {
  const RouteGraph graph = route_subgraph(*network_, path);
  if (graph.node_count() == 0) throw Error(ErrorKind::EmptyGraph, "route has no segments");
  EncodedRoute route;
  const std::size_t n = graph.node_count();
  const std::size_t k = network_->feature_count();
  route.features = Matrix(n, feature_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const Segment& seg = network_->segment(graph.segments[i]);
    double* row = route.features.row(i);
    for (std::size_t f = 0; f < k; ++f) row[f] = (seg.features[f] - scaler_.mean[f]) / scaler_.scale[f];
    row[k] = seg.length_m / 1000.0;
    row[k + 1] = seg.base_time_s() / 60.0;
    row[k + 2] = static_cast<double>(n) / 32.0;
  }
  route.centrality = centrality_indices(graph, *network_, max_degree_);
  route.spatial = cache_.get_or_compute(path, graph, max_hops_);
  route.time = time_features(depart_ts);
  return route;
}

}  // namespace transtte
