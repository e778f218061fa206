#include "transtte/poi_index.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "transtte/csv.hpp"
#include "transtte/error.hpp"
#include "transtte/geo.hpp"

namespace transtte {

std::string_view to_string(PoiCategory c) {
  switch (c) {
    case PoiCategory::Historic: return "historic";
    case PoiCategory::Nature: return "nature";
    case PoiCategory::Culture: return "culture";
  }
  return "unknown";
}

std::optional<PoiCategory> parse_category(std::string_view s) {
  if (s == "historic") return PoiCategory::Historic;
  if (s == "nature") return PoiCategory::Nature;
  if (s == "culture") return PoiCategory::Culture;
  return std::nullopt;
}

std::vector<Poi> load_pois(const std::filesystem::path& path) {
  const csv::Table table = csv::read_file(path);
  const std::vector<std::string> header{"poi_id", "lat", "lon", "category"};
  if (table.header != header) {
    throw Error(ErrorKind::SchemaViolation, path.string() + ": header must be poi_id,lat,lon,category");
  }
  std::vector<Poi> pois;
  pois.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string where = path.string() + ":" + std::to_string(row.line);
    Poi poi;
    poi.id = PoiId{csv::parse_int(row.fields[0], where)};
    poi.lat = csv::parse_double(row.fields[1], where);
    poi.lon = csv::parse_double(row.fields[2], where);
    if (!(poi.lat >= -90.0 && poi.lat <= 90.0) || !(poi.lon >= -180.0 && poi.lon <= 180.0)) {
      throw Error(ErrorKind::CoordinateOutOfRange, where + ": (" + row.fields[1] + ", " + row.fields[2] + ")");
    }
    auto cat = parse_category(row.fields[3]);
    if (!cat) throw Error(ErrorKind::UnknownCategory, where + ": '" + row.fields[3] + "'");
    poi.category = *cat;
    pois.push_back(poi);
  }
  return pois;
}

namespace {

void check_radius(double radius_m) {
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
    throw Error(ErrorKind::NonPositiveRadius, "radius must be > 0, got " + std::to_string(radius_m));
  }
}

bool within(const RoadNetwork& net, std::size_t segment, const Poi& poi, double radius_m) {
  const Node& a = net.node(net.from_index(segment));
  const Node& b = net.node(net.to_index(segment));
  return geo::point_to_chord_m(poi.lat, poi.lon, a.lat, a.lon, b.lat, b.lon) <= radius_m;
}

// Uniform lat/lon bucket grid. Cells are at least `radius_m` on a side at the
// most poleward latitude seen among POIs and network nodes.
class PoiGrid {
 public:
  PoiGrid(std::vector<Poi> pois, double radius_m, double max_abs_lat) : pois_(std::move(pois)) {
    for (const auto& p : pois_) max_abs_lat = std::max(max_abs_lat, std::abs(p.lat));
    cell_lat_ = radius_m / (geo::kEarthRadiusM * geo::deg2rad(1.0));
    const double cos_lat = std::max(std::cos(geo::deg2rad(std::min(max_abs_lat, 89.0))), 1e-3);
    cell_lon_ = cell_lat_ / cos_lat;
    for (std::uint32_t i = 0; i < pois_.size(); ++i) {
      buckets_[key(cell_y(pois_[i].lat), cell_x(pois_[i].lon))].push_back(i);
    }
  }

  template <typename Fn>
  void for_each_near(double lat_lo, double lat_hi, double lon_lo, double lon_hi, Fn&& fn) const {
    const double pad_lat = 1.01 * cell_lat_, pad_lon = 1.01 * cell_lon_;
    const auto y0 = cell_y(lat_lo - pad_lat), y1 = cell_y(lat_hi + pad_lat);
    const auto x0 = cell_x(lon_lo - pad_lon), x1 = cell_x(lon_hi + pad_lon);
    for (auto y = y0; y <= y1; ++y) {
      for (auto x = x0; x <= x1; ++x) {
        auto it = buckets_.find(key(y, x));
        if (it == buckets_.end()) continue;
        for (std::uint32_t i : it->second) fn(pois_[i]);
      }
    }
  }

 private:
  std::int64_t cell_y(double lat) const { return static_cast<std::int64_t>(std::floor(lat / cell_lat_)); }
  std::int64_t cell_x(double lon) const { return static_cast<std::int64_t>(std::floor(lon / cell_lon_)); }
  static std::int64_t key(std::int64_t y, std::int64_t x) { return (y << 32) ^ (x & 0xFFFFFFFF); }

  std::vector<Poi> pois_;
  double cell_lat_ = 0.0;
  double cell_lon_ = 0.0;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
};

std::vector<Poi> filtered(std::span<const Poi> pois, CategorySet categories) {
  std::vector<Poi> out;
  for (const auto& p : pois) {
    if (categories.contains(p.category)) out.push_back(p);
  }
  return out;
}

}  // namespace

std::uint32_t count_within_radius(const RoadNetwork& network, std::size_t segment,
                                  std::span<const Poi> pois, double radius_m) {
  check_radius(radius_m);
  std::uint32_t count = 0;
  for (const auto& poi : pois) count += within(network, segment, poi, radius_m) ? 1 : 0;
  return count;
}

SegmentWeights segment_weights(const RoadNetwork& network, std::span<const Poi> pois,
                               double radius_m, CategorySet categories) {
  check_radius(radius_m);
  double max_abs_lat = 0.0;
  for (const auto& node : network.nodes()) max_abs_lat = std::max(max_abs_lat, std::abs(node.lat));
  const PoiGrid grid(filtered(pois, categories), radius_m, max_abs_lat);
  const std::size_t m = network.segment_count();
  SegmentWeights out;
  out.counts.assign(m, 0);
  out.weights.assign(m, 1.0);
  // for_each_near pads the chord's bounding box by one cell (>= radius).
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(m); ++s) {
    const auto seg = static_cast<std::size_t>(s);
    const Node& a = network.node(network.from_index(seg));
    const Node& b = network.node(network.to_index(seg));
    std::uint32_t count = 0;
    grid.for_each_near(std::min(a.lat, b.lat), std::max(a.lat, b.lat), std::min(a.lon, b.lon),
                       std::max(a.lon, b.lon), [&](const Poi& poi) {
                         count += within(network, seg, poi, radius_m) ? 1 : 0;
                       });
    out.counts[seg] = count;
    out.weights[seg] = poi_weight(count);
  }
  return out;
}

namespace serial {

SegmentWeights segment_weights(const RoadNetwork& network, std::span<const Poi> pois,
                               double radius_m, CategorySet categories) {
  check_radius(radius_m);
  const std::vector<Poi> kept = filtered(pois, categories);
  SegmentWeights out;
  out.counts.resize(network.segment_count());
  out.weights.resize(network.segment_count());
  for (std::size_t s = 0; s < network.segment_count(); ++s) {
    out.counts[s] = count_within_radius(network, s, kept, radius_m);
    out.weights[s] = poi_weight(out.counts[s]);
  }
  return out;
}

}  // namespace serial
}  // namespace transtte
