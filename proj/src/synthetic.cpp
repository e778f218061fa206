#include "transtte/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include <json.hpp>

#include "transtte/error.hpp"
#include "transtte/geo.hpp"
#include "transtte/router.hpp"

namespace transtte::synthetic {

namespace {

constexpr double kClassSpeed[3] = {60.0, 40.0, 20.0};

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  out << std::setprecision(10);
  return out;
}

}  // namespace

RoadNetwork grid_network(const GridSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> road_class(0, 2);
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);

  const double dlat = spec.spacing_m / (geo::kEarthRadiusM * geo::deg2rad(1.0));
  const double dlon = dlat / std::cos(geo::deg2rad(spec.origin_lat));
  std::vector<Node> nodes;
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const auto id = static_cast<std::int64_t>(r * spec.cols + c + 1);
      nodes.push_back(Node{NodeId{id}, spec.origin_lat + (static_cast<double>(r) + 0.2 * jitter(rng)) * dlat,
                           spec.origin_lon + (static_cast<double>(c) + 0.2 * jitter(rng)) * dlon});
    }
  }
  std::vector<int> row_class(spec.rows), col_class(spec.cols);
  for (auto& k : row_class) k = road_class(rng);
  for (auto& k : col_class) k = road_class(rng);

  std::vector<Segment> segments;
  std::int64_t next_id = 1;
  auto add = [&](std::size_t a, std::size_t b, int cls) {
    const Node& na = nodes[a];
    const Node& nb = nodes[b];
    const double length = geo::haversine_m(na.lat, na.lon, nb.lat, nb.lon);
    const double speed = kClassSpeed[cls] * (1.0 + jitter(rng));
    for (int dir = 0; dir < 2; ++dir) {
      Segment s;
      s.id = SegmentId{next_id++};
      s.from = dir == 0 ? na.id : nb.id;
      s.to = dir == 0 ? nb.id : na.id;
      s.length_m = length;
      s.speed_kmh = speed;
      s.features = {cls == 0 ? 1.0 : 0.0, cls == 1 ? 1.0 : 0.0, cls == 2 ? 1.0 : 0.0, speed, length};
      segments.push_back(std::move(s));
    }
  };
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const std::size_t i = r * spec.cols + c;
      if (c + 1 < spec.cols) add(i, i + 1, row_class[r]);
      if (r + 1 < spec.rows) add(i, i + spec.cols, col_class[c]);
    }
  }
  return RoadNetwork::build(std::move(nodes), std::move(segments),
                            {"class_primary", "class_secondary", "class_residential", "speed_kmh", "length_m"});
}

std::vector<Trip> trips(const RoadNetwork& network, const TripSpec& spec) {
  if (network.node_count() < 2) throw Error(ErrorKind::EmptyNetwork, "need at least two nodes");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, network.node_count() - 1);
  std::uniform_real_distribution<double> perturb(0.7, 1.3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> offset(0, 31 * 86400 - 1);
  std::uniform_int_distribution<std::int64_t> rebuilds(1, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> costs(network.segment_count());
  std::vector<Trip> out;
  std::int64_t next_id = 1;
  std::size_t attempts = 0;
  while (out.size() < spec.count) {
    if (++attempts > spec.count * 100) {
      throw Error(ErrorKind::InvalidConfig, "could not generate enough trips on this network");
    }
    const std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    for (std::size_t s = 0; s < costs.size(); ++s) costs[s] = network.segment(s).base_time_s() * perturb(rng);
    Route route;
    try {
      route = dijkstra(network, network.node(a).id, network.node(b).id, costs);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Unreachable) continue;
      throw;
    }
    if (route.path.size() < spec.min_segments) continue;
    double base = 0.0;
    for (SegmentId id : route.path) base += network.segment(*network.segment_index(id)).base_time_s();
    Trip t;
    t.id = TripId{next_id++};
    t.depart_ts = spec.start_ts + offset(rng);
    t.path = std::move(route.path);
    t.travel_time_s = std::max(1.0, base * (1.0 + spec.noise * gauss(rng)));
    t.rebuild_count = unit(rng) < spec.noisy_fraction ? rebuilds(rng) : 0;
    t.dist_m = route.total_length_m;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Poi> pois(const RoadNetwork& network, std::size_t count, std::uint64_t seed) {
  std::vector<Poi> out;
  if (network.segment_count() == 0 || count == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, network.segment_count() - 1);
  std::uniform_int_distribution<int> category(0, 2);
  std::uniform_real_distribution<double> along(0.0, 1.0);
  std::normal_distribution<double> offset_m(0.0, 40.0);
  const std::size_t clusters = std::max<std::size_t>(1, count / 6);
  std::vector<std::size_t> anchors(clusters);
  for (auto& a : anchors) a = pick(rng);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t seg = anchors[i % clusters];
    const Node& a = network.node(network.from_index(seg));
    const Node& b = network.node(network.to_index(seg));
    const double t = along(rng);
    const double lat = a.lat + t * (b.lat - a.lat) + offset_m(rng) / (geo::kEarthRadiusM * geo::deg2rad(1.0));
    const double lon = a.lon + t * (b.lon - a.lon) +
                       offset_m(rng) / (geo::kEarthRadiusM * geo::deg2rad(1.0) * std::cos(geo::deg2rad(lat)));
    out.push_back(Poi{PoiId{static_cast<std::int64_t>(i + 1)}, lat, lon,
                      static_cast<PoiCategory>((i / 3 + static_cast<std::size_t>(category(rng))) % 3)});
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const RoadNetwork& network,
                   std::span<const Trip> trip_list, std::span<const Poi> poi_list) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "nodes.csv");
    out << "node_id,lat,lon\n";
    for (const auto& n : network.nodes()) out << n.id << ',' << n.lat << ',' << n.lon << '\n';
  }
  {
    auto out = open_out(dir / "edges.csv");
    out << "edge_id,from_node,to_node,length_m,speed_kmh";
    for (std::size_t f = 0; f < network.feature_count(); ++f) out << ",feat_" << f;
    out << '\n';
    for (const auto& s : network.segments()) {
      out << s.id << ',' << s.from << ',' << s.to << ',' << s.length_m << ',' << s.speed_kmh;
      for (double v : s.features) out << ',' << v;
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "schema.json");
    out << nlohmann::json{{"features", network.feature_names()}}.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "trips.csv");
    out << "trip_id,depart_ts,segment_path,travel_time_s,rebuild_count,dist_m\n";
    for (const auto& t : trip_list) {
      out << t.id << ',' << t.depart_ts << ",\"";
      for (std::size_t k = 0; k < t.path.size(); ++k) out << (k ? ";" : "") << t.path[k];
      out << "\"," << t.travel_time_s << ',' << t.rebuild_count << ',' << t.dist_m << '\n';
    }
  }
  {
    auto out = open_out(dir / "pois.csv");
    out << "poi_id,lat,lon,category\n";
    for (const auto& p : poi_list) out << p.id << ',' << p.lat << ',' << p.lon << ',' << to_string(p.category) << '\n';
  }
}

}  // namespace transtte::synthetic
