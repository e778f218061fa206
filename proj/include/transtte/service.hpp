#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "transtte/checkpoint.hpp"
#include "transtte/encoding.hpp"
#include "transtte/model.hpp"
#include "transtte/poi_index.hpp"
#include "transtte/road_graph.hpp"
#include "transtte/router.hpp"
#include "transtte/trainer.hpp"
#include "transtte/trip_pipeline.hpp"

namespace transtte {

// ---------------------------------------------------------------------------
// configuration

struct CityPaths {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::optional<std::filesystem::path> trips;
  std::optional<std::filesystem::path> pois;
  std::optional<std::filesystem::path> model;
};

struct ModelSettings {
  std::string preset = "toy";  // "toy" or "slim"
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> layers, width, heads, ffn_mult;
  std::uint16_t max_hops = kDefaultMaxHops;
  std::uint16_t max_degree = kDefaultMaxDegree;

  /// Resolves the preset plus overrides. Throws InvalidConfig.
  ModelConfig resolve(std::uint32_t feature_dim) const;
};

struct TrainSettings {
  TrainHyper hyper;
  double test_fraction = 0.2;
  double val_fraction = 0.1;
  std::uint64_t split_seed = 42;
};

/// JSON config. Relative paths are resolved against the config file's
/// directory.
struct ServiceConfig {
  std::map<std::string, CityPaths> cities;
  FilterConfig filter;
  double poi_radius_m = kDefaultPoiRadiusM;
  CategorySet picturesque{PoiCategory::Nature, PoiCategory::Culture};
  CategorySet historic{PoiCategory::Historic};
  ModelSettings model;
  TrainSettings train;
  std::size_t cache_entries = 0;

  static ServiceConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static ServiceConfig load(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// per-city state

/// Immutable serving state of one city: network, themed weights, model.
class CityState {
 public:
  /// Loads the network, the POI weights when a POI file is configured, and
  /// the model when its checkpoint exists.
  static std::shared_ptr<CityState> load(const std::string& name, const CityPaths& paths,
                                         const ServiceConfig& config);
  static std::shared_ptr<CityState> from_parts(std::string name, RoadNetwork network,
                                               std::optional<SegmentWeights> picturesque,
                                               std::optional<SegmentWeights> historic,
                                               std::optional<ModelParams> params, std::size_t cache_entries = 0);

  const std::string& name() const { return name_; }
  const RoadNetwork& network() const { return *network_; }
  const SegmentWeights* weights(RouteKind kind) const;
  const ModelParams* params() const { return params_ ? &*params_ : nullptr; }
  const std::string& model_version() const { return model_version_; }
  RouteEncoder& encoder() const { return *encoder_; }

 private:
  std::string name_;
  std::unique_ptr<RoadNetwork> network_;
  std::optional<SegmentWeights> picturesque_;
  std::optional<SegmentWeights> historic_;
  std::optional<ModelParams> params_;
  std::string model_version_;
  std::unique_ptr<RouteEncoder> encoder_;
};

// ---------------------------------------------------------------------------
// requests

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const LatLon&) const = default;
};

using Endpoint = std::variant<NodeId, LatLon>;

struct RouteRequest {
  Endpoint origin;
  Endpoint destination;
  std::int64_t depart_ts = 0;
  RouteKind kind = RouteKind::Fastest;
  std::string city;

  /// Endpoints are a node id (integer), {"lat":..,"lon":..} or [lat, lon].
  /// Throws InvalidRequest.
  static RouteRequest from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct RouteResponse {
  std::vector<SegmentId> path;
  std::vector<LatLon> polyline;
  double eta = 0.0;
  double total_length = 0.0;
  RouteKind kind = RouteKind::Fastest;
  std::string model_version;

  nlohmann::json to_json() const;
};

/// Parses "lat,lon" or a bare node id, as used on the command line.
Endpoint parse_endpoint(const std::string& text);

/// Nearest node by great-circle distance; ties go to the smaller node id.
/// Throws EmptyNetwork.
NodeId snap_to_node(const RoadNetwork& network, double lat, double lon);

/// Snap, route by kind, then attach the model's ETA for the chosen path.
RouteResponse handle_route(const RouteRequest& request, const CityState& city);

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

/// Routing facade over the loaded cities; stateless per request.
class Service {
 public:
  explicit Service(std::map<std::string, std::shared_ptr<const CityState>> cities)
      : cities_(std::move(cities)) {}

  static Service load(const ServiceConfig& config);

  const CityState& city(const std::string& name) const;  // throws CityNotLoaded
  std::vector<std::string> city_names() const;

  RouteResponse route(const RouteRequest& request) const;

  /// Transport-independent HTTP dispatch:
  ///   POST /v1/route, GET /v1/cities, GET /v1/health.
  /// Errors come back as {"error": kind, "message": text} with the status
  /// given by http_status().
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body) const;

 private:
  std::map<std::string, std::shared_ptr<const CityState>> cities_;
};

/// cpp-httplib listener bound to a Service.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or throws IoError.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// `transtte` command line. Returns 0 on success, 2 on usage errors and 1 on
/// runtime errors.
int cli_dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace transtte
