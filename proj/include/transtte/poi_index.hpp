#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "transtte/ids.hpp"
#include "transtte/road_graph.hpp"

namespace transtte {

enum class PoiCategory : std::uint8_t { Historic = 0, Nature = 1, Culture = 2 };

std::string_view to_string(PoiCategory c);
std::optional<PoiCategory> parse_category(std::string_view s);

struct Poi {
  PoiId id;
  double lat = 0.0;
  double lon = 0.0;
  PoiCategory category = PoiCategory::Historic;
};

class CategorySet {
 public:
  constexpr CategorySet() = default;
  constexpr CategorySet(std::initializer_list<PoiCategory> cats) {
    for (auto c : cats) insert(c);
  }
  static constexpr CategorySet all() {
    return {PoiCategory::Historic, PoiCategory::Nature, PoiCategory::Culture};
  }

  constexpr void insert(PoiCategory c) { mask_ |= bit(c); }
  constexpr bool contains(PoiCategory c) const { return (mask_ & bit(c)) != 0; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr bool operator==(const CategorySet&) const = default;

 private:
  static constexpr std::uint8_t bit(PoiCategory c) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
  }
  std::uint8_t mask_ = 0;
};

inline constexpr double kDefaultPoiRadiusM = 100.0;

/// Per-segment POI counts c_r and themed Dijkstra weights w = 1 / (1 + c_r),
/// indexed by dense segment index.
struct SegmentWeights {
  std::vector<std::uint32_t> counts;
  std::vector<double> weights;

  double weight(std::size_t segment) const { return weights[segment]; }
};

inline double poi_weight(std::uint32_t count) { return 1.0 / (1.0 + static_cast<double>(count)); }

/// Reads pois.csv (`poi_id,lat,lon,category`).
std::vector<Poi> load_pois(const std::filesystem::path& path);

/// Number of POIs within `radius_m` of the straight chord of `segment`
/// (dense index). Throws NonPositiveRadius.
std::uint32_t count_within_radius(const RoadNetwork& network, std::size_t segment,
                                  std::span<const Poi> pois, double radius_m);

/// Counts for every segment using a uniform lat/lon grid over the filtered
/// POIs; segments are processed in parallel.
SegmentWeights segment_weights(const RoadNetwork& network, std::span<const Poi> pois,
                               double radius_m, CategorySet categories);

namespace serial {
/// Brute-force reference: every POI against every segment.
SegmentWeights segment_weights(const RoadNetwork& network, std::span<const Poi> pois,
                               double radius_m, CategorySet categories);
}  // namespace serial

}  // namespace transtte
