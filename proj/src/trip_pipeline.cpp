#include "transtte/trip_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "transtte/csv.hpp"
#include "transtte/error.hpp"

namespace transtte {

void FilterConfig::validate() const {
  if (!(min_length_m < max_length_m)) {
    throw Error(ErrorKind::InvalidConfig, "filter: min_length must be < max_length");
  }
  if (!(min_time_s < max_time_s)) {
    throw Error(ErrorKind::InvalidConfig, "filter: min_time must be < max_time");
  }
}

std::vector<Trip> load_trips(const std::filesystem::path& path, const RoadNetwork& network) {
  const csv::Table table = csv::read_file(path);
  const std::vector<std::string> header{"trip_id",       "depart_ts",     "segment_path",
                                        "travel_time_s", "rebuild_count", "dist_m"};
  if (table.header != header) {
    throw Error(ErrorKind::SchemaViolation,
                path.string() + ": header must be " +
                    "trip_id,depart_ts,segment_path,travel_time_s,rebuild_count,dist_m");
  }
  std::vector<Trip> trips;
  trips.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const std::string where = path.string() + ":" + std::to_string(row.line);
    Trip trip;
    trip.id = TripId{csv::parse_int(row.fields[0], where)};
    trip.depart_ts = csv::parse_int(row.fields[1], where);

    const std::string& field = row.fields[2];
    if (field.empty()) throw Error(ErrorKind::SchemaViolation, where + ": empty segment_path");
    std::size_t start = 0;
    while (start <= field.size()) {
      std::size_t end = field.find(';', start);
      if (end == std::string::npos) end = field.size();
      trip.path.emplace_back(csv::parse_int(field.substr(start, end - start), where));
      start = end + 1;
    }

    trip.travel_time_s = csv::parse_double(row.fields[3], where);
    if (!(trip.travel_time_s > 0.0)) {
      throw Error(ErrorKind::NonPositiveTime, where + ": travel_time_s must be > 0");
    }
    trip.rebuild_count = csv::parse_int(row.fields[4], where);
    if (trip.rebuild_count < 0) {
      throw Error(ErrorKind::SchemaViolation, where + ": rebuild_count must be >= 0");
    }
    trip.dist_m = csv::parse_double(row.fields[5], where);
    if (!(trip.dist_m > 0.0)) throw Error(ErrorKind::SchemaViolation, where + ": dist_m must be > 0");

    double summed = 0.0;
    std::size_t prev = 0;
    for (std::size_t k = 0; k < trip.path.size(); ++k) {
      auto idx = network.segment_index(trip.path[k]);
      if (!idx) {
        throw Error(ErrorKind::UnknownSegment,
                    where + ": segment " + std::to_string(trip.path[k].value));
      }
      if (k > 0 && network.to_index(prev) != network.from_index(*idx)) {
        throw Error(ErrorKind::BrokenChain, where + ": path is not chainable at position " +
                                                std::to_string(k));
      }
      summed += network.segment(*idx).length_m;
      prev = *idx;
    }
    if (std::abs(trip.dist_m - summed) > 0.01 * summed) {
      throw Error(ErrorKind::SchemaViolation,
                  where + ": dist_m " + std::to_string(trip.dist_m) +
                      " differs from summed segment length " + std::to_string(summed) + " by > 1%");
    }
    trips.push_back(std::move(trip));
  }
  return trips;
}

std::vector<Trip> filter_trips(std::span<const Trip> trips, const FilterConfig& cfg) {
  std::vector<Trip> kept;
  std::copy_if(trips.begin(), trips.end(), std::back_inserter(kept), [&](const Trip& t) {
    return t.rebuild_count <= cfg.max_rebuild_count && t.dist_m >= cfg.min_length_m &&
           t.dist_m <= cfg.max_length_m && t.travel_time_s >= cfg.min_time_s &&
           t.travel_time_s <= cfg.max_time_s;
  });
  return kept;
}

Split split(std::span<const Trip> trips, double test_fraction, std::uint64_t seed) {
  if (trips.size() < 2) throw Error(ErrorKind::TooFewTrips, "need at least 2 trips to split");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(trips.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(
      std::floor(test_fraction * static_cast<double>(trips.size()) + 0.5));
  Split out;
  out.test.reserve(n_test);
  out.train.reserve(trips.size() - n_test);
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_test ? out.test : out.train).push_back(trips[order[k]]);
  }
  return out;
}

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch, "pred has " + std::to_string(pred.size()) +
                                               " values, truth has " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw Error(ErrorKind::Empty, "metrics need at least one value");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - truth[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

}  // namespace transtte
