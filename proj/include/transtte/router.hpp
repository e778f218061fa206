#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "transtte/ids.hpp"
#include "transtte/poi_index.hpp"
#include "transtte/road_graph.hpp"

namespace transtte {

enum class RouteKind { Fastest, Picturesque, Historic };

std::string_view to_string(RouteKind kind);
std::optional<RouteKind> parse_route_kind(std::string_view s);

struct Route {
  std::vector<SegmentId> path;
  double total_cost = 0.0;
  double total_length_m = 0.0;
  std::optional<double> eta_s;
};

/// Edge cost: free-flow seconds (length / base speed) or the themed POI
/// weight w of the segment.
class CostFunction {
 public:
  enum class Mode { BaseTime, PoiWeight };

  static CostFunction base_time() { return CostFunction(Mode::BaseTime, nullptr); }
  static CostFunction poi_weight(const SegmentWeights& weights) {
    return CostFunction(Mode::PoiWeight, &weights);
  }

  Mode mode() const { return mode_; }
  double operator()(const RoadNetwork& network, std::size_t segment) const;

 private:
  CostFunction(Mode mode, const SegmentWeights* weights) : mode_(mode), weights_(weights) {}
  Mode mode_;
  const SegmentWeights* weights_;
};

/// Minimum-cost directed path. Frontier ties pop the smaller node id first and
/// a parent only changes on strict improvement, so the result is fully
/// deterministic. Throws UnknownNode, Unreachable, or InvalidConfig if a
/// segment cost is not strictly positive and finite.
Route dijkstra(const RoadNetwork& network, NodeId origin, NodeId destination, const CostFunction& cost);

/// Same search over explicit per-segment costs (dense segment index).
Route dijkstra(const RoadNetwork& network, NodeId origin, NodeId destination,
               std::span<const double> segment_costs);

/// fastest -> base time; picturesque / historic -> the POI weights for that
/// theme. Throws MissingWeights for a themed kind without weights.
Route route_by_type(const RoadNetwork& network, NodeId origin, NodeId destination, RouteKind kind,
                    const SegmentWeights* weights);

}  // namespace transtte
