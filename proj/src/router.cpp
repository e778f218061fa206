#include "transtte/router.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "transtte/error.hpp"

namespace transtte {

std::string_view to_string(RouteKind kind) {
  switch (kind) {
    case RouteKind::Fastest: return "fastest";
    case RouteKind::Picturesque: return "picturesque";
    case RouteKind::Historic: return "historic";
  }
  return "unknown";
}

std::optional<RouteKind> parse_route_kind(std::string_view s) {
  if (s == "fastest") return RouteKind::Fastest;
  if (s == "picturesque") return RouteKind::Picturesque;
  if (s == "historic") return RouteKind::Historic;
  return std::nullopt;
}

double CostFunction::operator()(const RoadNetwork& network, std::size_t segment) const {
  switch (mode_) {
    case Mode::BaseTime: return network.segment(segment).base_time_s();
    case Mode::PoiWeight: return weights_->weight(segment);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Route dijkstra(const RoadNetwork& network, NodeId origin, NodeId destination, const CostFunction& cost) {
  std::vector<double> costs(network.segment_count());
  for (std::size_t s = 0; s < costs.size(); ++s) costs[s] = cost(network, s);
  return dijkstra(network, origin, destination, costs);
}

Route dijkstra(const RoadNetwork& network, NodeId origin, NodeId destination,
               std::span<const double> segment_costs) {
  const auto src = network.node_index(origin);
  if (!src) throw Error(ErrorKind::UnknownNode, "origin " + std::to_string(origin.value));
  const auto dst = network.node_index(destination);
  if (!dst) throw Error(ErrorKind::UnknownNode, "destination " + std::to_string(destination.value));
  if (segment_costs.size() != network.segment_count()) {
    throw Error(ErrorKind::ShapeMismatch, "cost vector does not match segment count");
  }
  for (std::size_t s = 0; s < segment_costs.size(); ++s) {
    if (!(segment_costs[s] > 0.0) || !std::isfinite(segment_costs[s])) {
      throw Error(ErrorKind::InvalidConfig, "segment " + std::to_string(network.segment(s).id.value) +
                                                " has non-positive or non-finite cost");
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr auto kNone = static_cast<std::size_t>(-1);
  const std::size_t n = network.node_count();
  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> parent_segment(n, kNone);
  std::vector<bool> settled(n, false);

  // (cost, dense node index); dense index order equals node id order.
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
  dist[*src] = 0.0;
  frontier.emplace(0.0, *src);
  while (!frontier.empty()) {
    const auto [d, u] = frontier.top();
    frontier.pop();
    if (settled[u] || d > dist[u]) continue;
    settled[u] = true;
    if (u == *dst) break;
    for (std::uint32_t s : network.out_segments(u)) {
      const std::size_t v = network.to_index(s);
      if (settled[v]) continue;
      const double nd = d + segment_costs[s];
      if (nd < dist[v]) {
        dist[v] = nd;
        parent_segment[v] = s;
        frontier.emplace(nd, v);
      }
    }
  }
  if (dist[*dst] == kInf) {
    throw Error(ErrorKind::Unreachable, "no path from " + std::to_string(origin.value) + " to " +
                                            std::to_string(destination.value));
  }

  Route route;
  std::vector<std::size_t> reversed;
  for (std::size_t v = *dst; v != *src;) {
    const std::size_t s = parent_segment[v];
    reversed.push_back(s);
    v = network.from_index(s);
  }
  for (auto it = reversed.rbegin(); it != reversed.rend(); ++it) {
    route.path.push_back(network.segment(*it).id);
    route.total_cost += segment_costs[*it];
    route.total_length_m += network.segment(*it).length_m;
  }
  return route;
}

Route route_by_type(const RoadNetwork& network, NodeId origin, NodeId destination, RouteKind kind,
                    const SegmentWeights* weights) {
  if (kind == RouteKind::Fastest) {
    return dijkstra(network, origin, destination, CostFunction::base_time());
  }
  if (weights == nullptr) {
    throw Error(ErrorKind::MissingWeights,
                std::string("POI weights not loaded for ") + std::string(to_string(kind)) + " routing");
  }
  if (weights->weights.size() != network.segment_count()) {
    throw Error(ErrorKind::ShapeMismatch, "segment weights do not match the network");
  }
  return dijkstra(network, origin, destination, CostFunction::poi_weight(*weights));
}

}  // namespace transtte
