#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "transtte/poi_index.hpp"
#include "transtte/road_graph.hpp"
#include "transtte/trip_pipeline.hpp"

namespace transtte::synthetic {

/// Rectangular street grid with two-way segments between neighbours. Each
/// street gets a road class (primary / secondary / residential) that sets its
/// speed. Features: three class one-hots, speed_kmh, length_m.
struct GridSpec {
  std::size_t rows = 10;
  std::size_t cols = 20;
  double spacing_m = 200.0;
  double origin_lat = 54.98;
  double origin_lon = 73.35;
  std::uint64_t seed = 1;
};

RoadNetwork grid_network(const GridSpec& spec);

struct TripSpec {
  std::size_t count = 1000;
  double noise = 0.05;          // relative std of the multiplicative label noise
  std::size_t min_segments = 3;
  double noisy_fraction = 0.0;  // share of trips given rebuild_count >= 1
  std::int64_t start_ts = 1606780800;  // 2020-12-01T00:00:00Z
  std::uint64_t seed = 2;
};

/// Trips along randomly perturbed fastest paths. Labels are the summed
/// free-flow segment times times (1 + noise * N(0, 1)).
std::vector<Trip> trips(const RoadNetwork& network, const TripSpec& spec);

/// POIs scattered around a few randomly chosen segments.
std::vector<Poi> pois(const RoadNetwork& network, std::size_t count, std::uint64_t seed);

/// Writes nodes.csv, edges.csv, schema.json, trips.csv and pois.csv.
void write_dataset(const std::filesystem::path& dir, const RoadNetwork& network,
                   std::span<const Trip> trips, std::span<const Poi> pois);

}  // namespace transtte::synthetic
