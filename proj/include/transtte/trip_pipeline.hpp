#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "transtte/ids.hpp"
#include "transtte/road_graph.hpp"

namespace transtte {

struct Trip {
  TripId id;
  std::int64_t depart_ts = 0;  // unix seconds
  std::vector<SegmentId> path;
  double travel_time_s = 0.0;
  std::int64_t rebuild_count = 0;
  double dist_m = 0.0;
};

/// Noise filter bounds. Defaults are plausible city-trip limits.
struct FilterConfig {
  std::int64_t max_rebuild_count = 0;
  double min_length_m = 500.0;
  double max_length_m = 50000.0;
  double min_time_s = 60.0;
  double max_time_s = 7200.0;

  /// Throws InvalidConfig unless min < max for both ranges.
  void validate() const;
};

/// Parses trips.csv. Every segment must exist in `network`, paths must chain,
/// and dist_m must agree with the summed segment lengths within 1%.
std::vector<Trip> load_trips(const std::filesystem::path& path, const RoadNetwork& network);

/// Keeps trips passing all three filters (rebuild count, length, time); bounds
/// are inclusive and input order is preserved.
std::vector<Trip> filter_trips(std::span<const Trip> trips, const FilterConfig& cfg);

struct Split {
  std::vector<Trip> train;
  std::vector<Trip> test;
};

/// Seeded uniform shuffle then cut. |test| = floor(fraction * n + 0.5).
Split split(std::span<const Trip> trips, double test_fraction, std::uint64_t seed);

double mae(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);

}  // namespace transtte
