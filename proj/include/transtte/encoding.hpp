#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "transtte/ids.hpp"
#include "transtte/kernels.hpp"
#include "transtte/road_graph.hpp"

namespace transtte {

inline constexpr std::uint16_t kDefaultMaxHops = 20;
inline constexpr std::uint16_t kDefaultMaxDegree = 8;

/// All-pairs hop-distance buckets for one route graph. Entries lie in
/// [0, max_hops] or equal unreachable() == max_hops + 1.
struct SpatialEncodingTable {
  std::size_t n = 0;
  std::uint16_t max_hops = kDefaultMaxHops;
  std::vector<std::uint16_t> phi;

  std::uint16_t operator()(std::size_t i, std::size_t j) const { return phi[i * n + j]; }
  std::uint16_t unreachable() const { return static_cast<std::uint16_t>(max_hops + 1); }
  /// Number of distinct buckets, i.e. the b_phi table width.
  std::size_t bucket_count() const { return std::size_t{max_hops} + 2; }

  bool operator==(const SpatialEncodingTable&) const = default;
};

/// BFS from every node. Throws EmptyGraph for n = 0 and InvalidConfig for
/// max_hops < 1.
SpatialEncodingTable shortest_hop_distances(const AdjacencyList& adjacency, std::uint16_t max_hops);
SpatialEncodingTable shortest_hop_distances(const RouteGraph& graph, std::uint16_t max_hops);

/// Degree buckets per route node. A segment-node takes the indegree of its
/// from-node and the outdegree of its to-node in the parent network, each
/// clipped to max_degree.
struct CentralityIndices {
  std::vector<std::uint16_t> in_bucket;
  std::vector<std::uint16_t> out_bucket;

  bool operator==(const CentralityIndices&) const = default;
};

CentralityIndices centrality_indices(const RouteGraph& graph, const RoadNetwork& network,
                                     std::uint16_t max_degree);

/// Spatial encodings keyed by the exact segment sequence (order-sensitive).
/// Thread-safe; concurrent misses on one key may both compute, and the last
/// insert wins. max_entries = 0 means unbounded, otherwise least recently
/// used entries are evicted.
class EncodingCache {
 public:
  explicit EncodingCache(std::size_t max_entries = 0) : max_entries_(max_entries) {}

  std::shared_ptr<const SpatialEncodingTable> get_or_compute(std::span<const SegmentId> path,
                                                             const RouteGraph& graph,
                                                             std::uint16_t max_hops);

  std::uint64_t hits() const { return hits_.load(std::memory_order_relaxed); }
  std::uint64_t misses() const { return misses_.load(std::memory_order_relaxed); }
  std::size_t size() const;
  void clear();

 private:
  struct Key {
    std::uint16_t max_hops = 0;
    std::vector<SegmentId> path;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct Entry {
    std::shared_ptr<const SpatialEncodingTable> table;
    std::list<Key>::iterator lru;
  };

  std::size_t max_entries_;
  mutable std::mutex mu_;
  std::unordered_map<Key, Entry, KeyHash> entries_;
  std::list<Key> lru_;  // front = most recent
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

inline constexpr std::size_t kTimeFeatures = 8;
/// Columns appended after the dataset features: length in km, free-flow time
/// in minutes, and route size (segment count / 32).
inline constexpr std::size_t kDerivedFeatures = 3;

/// Model input for one route.
struct EncodedRoute {
  Matrix features;  // n x feature_dim
  CentralityIndices centrality;
  std::shared_ptr<const SpatialEncodingTable> spatial;
  std::array<double, kTimeFeatures> time{};

  std::size_t node_count() const { return features.rows; }
};

/// hour_of_day / 24 followed by a Monday-first day-of-week one-hot (UTC).
std::array<double, kTimeFeatures> time_features(std::int64_t unix_seconds);

/// Per-column standardization of the dataset segment features.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler fit(const RoadNetwork& network);
};

/// Builds EncodedRoutes for trips on one network, using a shared cache for
/// the spatial encodings.
class RouteEncoder {
 public:
  RouteEncoder(const RoadNetwork& network, std::uint16_t max_hops = kDefaultMaxHops,
               std::uint16_t max_degree = kDefaultMaxDegree, std::size_t cache_entries = 0);

  EncodedRoute encode(std::span<const SegmentId> path, std::int64_t depart_ts);

  std::size_t feature_dim() const { return network_->feature_count() + kDerivedFeatures; }
  const RoadNetwork& network() const { return *network_; }
  EncodingCache& cache() { return cache_; }
  std::uint16_t max_hops() const { return max_hops_; }
  std::uint16_t max_degree() const { return max_degree_; }

 private:
  const RoadNetwork* network_;
  std::uint16_t max_hops_;
  std::uint16_t max_degree_;
  FeatureScaler scaler_;
  EncodingCache cache_;
};

}  // namespace transtte
