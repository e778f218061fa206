#include "transtte/service.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <httplib.h>

#include "transtte/error.hpp"
#include "transtte/geo.hpp"

namespace transtte {

using nlohmann::json;

// ---------------------------------------------------------------------------
// configuration

ModelConfig ModelSettings::resolve(std::uint32_t feature_dim) const {
  ModelConfig cfg;
  if (preset == "toy") {
    cfg = ModelConfig::toy(feature_dim, seed);
  } else if (preset == "slim") {
    cfg = ModelConfig::slim(feature_dim, seed);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown model preset '" + preset + "'");
  }
  if (layers) cfg.layers = *layers;
  if (width) cfg.width = *width;
  if (heads) cfg.heads = *heads;
  if (ffn_mult) cfg.ffn_mult = *ffn_mult;
  cfg.max_hops = max_hops;
  cfg.max_degree = max_degree;
  cfg.validate();
  return cfg;
}

namespace {

CategorySet parse_categories(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw Error(ErrorKind::InvalidConfig, what + " must be an array of categories");
  CategorySet set;
  for (const auto& item : arr) {
    const auto cat = item.is_string() ? parse_category(item.get<std::string>()) : std::nullopt;
    if (!cat) throw Error(ErrorKind::UnknownCategory, what + ": " + item.dump());
    set.insert(*cat);
  }
  return set;
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  try {
    if (!doc.is_object() || !doc.contains("cities") || !doc["cities"].is_object()) {
      throw Error(ErrorKind::InvalidConfig, "config needs a \"cities\" object");
    }
    auto resolve = [&](const json& v) {
      std::filesystem::path p = v.get<std::string>();
      return p.is_absolute() ? p : base_dir / p;
    };
    for (const auto& [name, c] : doc["cities"].items()) {
      CityPaths paths;
      if (!c.contains("nodes") || !c.contains("edges")) {
        throw Error(ErrorKind::InvalidConfig, "city '" + name + "' needs nodes and edges paths");
      }
      paths.nodes = resolve(c["nodes"]);
      paths.edges = resolve(c["edges"]);
      if (c.contains("trips")) paths.trips = resolve(c["trips"]);
      if (c.contains("pois")) paths.pois = resolve(c["pois"]);
      if (c.contains("model")) paths.model = resolve(c["model"]);
      cfg.cities.emplace(name, std::move(paths));
    }
    if (doc.contains("filter")) {
      const json& f = doc["filter"];
      read_opt(f, "max_rebuild_count", cfg.filter.max_rebuild_count);
      read_opt(f, "min_length_m", cfg.filter.min_length_m);
      read_opt(f, "max_length_m", cfg.filter.max_length_m);
      read_opt(f, "min_time_s", cfg.filter.min_time_s);
      read_opt(f, "max_time_s", cfg.filter.max_time_s);
    }
    cfg.filter.validate();
    read_opt(doc, "poi_radius_m", cfg.poi_radius_m);
    if (!(cfg.poi_radius_m > 0.0)) throw Error(ErrorKind::NonPositiveRadius, "poi_radius_m must be > 0");
    if (doc.contains("categories")) {
      const json& c = doc["categories"];
      if (c.contains("picturesque")) cfg.picturesque = parse_categories(c["picturesque"], "categories.picturesque");
      if (c.contains("historic")) cfg.historic = parse_categories(c["historic"], "categories.historic");
    }
    if (doc.contains("model")) {
      const json& m = doc["model"];
      read_opt(m, "preset", cfg.model.preset);
      read_opt(m, "seed", cfg.model.seed);
      if (m.contains("layers")) cfg.model.layers = m["layers"].get<std::uint32_t>();
      if (m.contains("width")) cfg.model.width = m["width"].get<std::uint32_t>();
      if (m.contains("heads")) cfg.model.heads = m["heads"].get<std::uint32_t>();
      if (m.contains("ffn_mult")) cfg.model.ffn_mult = m["ffn_mult"].get<std::uint32_t>();
      read_opt(m, "max_hops", cfg.model.max_hops);
      read_opt(m, "max_degree", cfg.model.max_degree);
    }
    if (doc.contains("train")) {
      const json& t = doc["train"];
      TrainHyper& h = cfg.train.hyper;
      read_opt(t, "lr", h.optim.lr);
      read_opt(t, "beta1", h.optim.beta1);
      read_opt(t, "beta2", h.optim.beta2);
      read_opt(t, "eps", h.optim.eps);
      read_opt(t, "weight_decay", h.optim.weight_decay);
      read_opt(t, "batch_size", h.batch_size);
      read_opt(t, "epochs", h.epochs);
      read_opt(t, "max_steps", h.max_steps);
      read_opt(t, "test_fraction", cfg.train.test_fraction);
      read_opt(t, "val_fraction", cfg.train.val_fraction);
      read_opt(t, "split_seed", cfg.train.split_seed);
    }
    read_opt(doc, "cache_entries", cfg.cache_entries);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// city state

std::shared_ptr<CityState> CityState::from_parts(std::string name, RoadNetwork network,
                                                 std::optional<SegmentWeights> picturesque,
                                                 std::optional<SegmentWeights> historic,
                                                 std::optional<ModelParams> params, std::size_t cache_entries) {
  auto city = std::make_shared<CityState>();
  city->name_ = std::move(name);
  city->network_ = std::make_unique<RoadNetwork>(std::move(network));
  city->picturesque_ = std::move(picturesque);
  city->historic_ = std::move(historic);
  std::uint16_t max_hops = kDefaultMaxHops, max_degree = kDefaultMaxDegree;
  if (params) {
    max_hops = params->config.max_hops;
    max_degree = params->config.max_degree;
    city->model_version_ = transtte::model_version(*params);
  }
  city->params_ = std::move(params);
  city->encoder_ = std::make_unique<RouteEncoder>(*city->network_, max_hops, max_degree, cache_entries);
  if (city->params_ && city->params_->config.feature_dim != city->encoder_->feature_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "model for city '" + city->name_ + "' expects " +
                                              std::to_string(city->params_->config.feature_dim) +
                                              " features, network provides " +
                                              std::to_string(city->encoder_->feature_dim()));
  }
  return city;
}

std::shared_ptr<CityState> CityState::load(const std::string& name, const CityPaths& paths,
                                           const ServiceConfig& config) {
  RoadNetwork network = load_network(paths.nodes, paths.edges);
  std::optional<SegmentWeights> picturesque, historic;
  if (paths.pois) {
    const std::vector<Poi> pois = load_pois(*paths.pois);
    picturesque = segment_weights(network, pois, config.poi_radius_m, config.picturesque);
    historic = segment_weights(network, pois, config.poi_radius_m, config.historic);
  }
  std::optional<ModelParams> params;
  if (paths.model && std::filesystem::exists(*paths.model)) params = load_params(*paths.model);
  return from_parts(name, std::move(network), std::move(picturesque), std::move(historic), std::move(params),
                    config.cache_entries);
}

const SegmentWeights* CityState::weights(RouteKind kind) const {
  switch (kind) {
    case RouteKind::Fastest: return nullptr;
    case RouteKind::Picturesque: return picturesque_ ? &*picturesque_ : nullptr;
    case RouteKind::Historic: return historic_ ? &*historic_ : nullptr;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// requests

namespace {

Endpoint endpoint_from_json(const json& v, const char* field) {
  if (v.is_number_integer()) return NodeId{v.get<std::int64_t>()};
  double lat = 0.0, lon = 0.0;
  if (v.is_object() && v.contains("lat") && v.contains("lon") && v["lat"].is_number() && v["lon"].is_number()) {
    lat = v["lat"].get<double>();
    lon = v["lon"].get<double>();
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    lat = v[0].get<double>();
    lon = v[1].get<double>();
  } else {
    throw Error(ErrorKind::InvalidRequest,
                std::string(field) + " must be a node id, {\"lat\",\"lon\"} or [lat, lon]");
  }
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw Error(ErrorKind::CoordinateOutOfRange, std::string(field) + " coordinates out of range");
  }
  return LatLon{lat, lon};
}

json endpoint_to_json(const Endpoint& e) {
  if (const auto* id = std::get_if<NodeId>(&e)) return id->value;
  const auto& p = std::get<LatLon>(e);
  return json{{"lat", p.lat}, {"lon", p.lon}};
}

std::size_t resolve_endpoint(const RoadNetwork& network, const Endpoint& e, const char* field) {
  NodeId id;
  if (const auto* node = std::get_if<NodeId>(&e)) {
    id = *node;
  } else {
    const auto& p = std::get<LatLon>(e);
    id = snap_to_node(network, p.lat, p.lon);
  }
  auto idx = network.node_index(id);
  if (!idx) throw Error(ErrorKind::UnknownNode, std::string(field) + " node " + std::to_string(id.value));
  return *idx;
}

}  // namespace

RouteRequest RouteRequest::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidRequest, "request body must be a JSON object");
  for (const char* key : {"origin", "destination", "kind", "city"}) {
    if (!doc.contains(key)) throw Error(ErrorKind::InvalidRequest, std::string("missing field '") + key + "'");
  }
  RouteRequest req;
  req.origin = endpoint_from_json(doc["origin"], "origin");
  req.destination = endpoint_from_json(doc["destination"], "destination");
  if (doc.contains("depart_ts")) {
    if (!doc["depart_ts"].is_number_integer()) throw Error(ErrorKind::InvalidRequest, "depart_ts must be an integer");
    req.depart_ts = doc["depart_ts"].get<std::int64_t>();
  }
  if (!doc["kind"].is_string()) throw Error(ErrorKind::InvalidRequest, "kind must be a string");
  const auto kind = parse_route_kind(doc["kind"].get<std::string>());
  if (!kind) throw Error(ErrorKind::InvalidRequest, "unknown kind '" + doc["kind"].get<std::string>() + "'");
  req.kind = *kind;
  if (!doc["city"].is_string()) throw Error(ErrorKind::InvalidRequest, "city must be a string");
  req.city = doc["city"].get<std::string>();
  return req;
}

json RouteRequest::to_json() const {
  return json{{"origin", endpoint_to_json(origin)},
              {"destination", endpoint_to_json(destination)},
              {"depart_ts", depart_ts},
              {"kind", std::string(to_string(kind))},
              {"city", city}};
}

json RouteResponse::to_json() const {
  json p = json::array();
  for (SegmentId id : path) p.push_back(id.value);
  json line = json::array();
  for (const auto& pt : polyline) line.push_back(json::array({pt.lat, pt.lon}));
  return json{{"path", p},
              {"polyline", line},
              {"eta", eta},
              {"total_length", total_length},
              {"kind", std::string(to_string(kind))},
              {"model_version", model_version}};
}

Endpoint parse_endpoint(const std::string& text) {
  const auto comma = text.find(',');
  auto parse = [&](std::string_view s, auto& value) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
  };
  if (comma == std::string::npos) {
    std::int64_t id = 0;
    if (!parse(text, id)) throw Error(ErrorKind::UsageError, "expected node id or lat,lon: '" + text + "'");
    return NodeId{id};
  }
  LatLon p;
  const std::string_view sv(text);
  if (!parse(sv.substr(0, comma), p.lat) || !parse(sv.substr(comma + 1), p.lon)) {
    throw Error(ErrorKind::UsageError, "expected lat,lon: '" + text + "'");
  }
  return p;
}

NodeId snap_to_node(const RoadNetwork& network, double lat, double lon) {
  if (network.node_count() == 0) throw Error(ErrorKind::EmptyNetwork, "network has no nodes");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  // Nodes are stored in id order, so strict < keeps the smaller id on ties.
  for (std::size_t i = 0; i < network.node_count(); ++i) {
    const Node& n = network.node(i);
    const double d = geo::haversine_m(lat, lon, n.lat, n.lon);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return network.node(best).id;
}

RouteResponse handle_route(const RouteRequest& request, const CityState& city) {
  const RoadNetwork& net = city.network();
  const std::size_t from = resolve_endpoint(net, request.origin, "origin");
  const std::size_t to = resolve_endpoint(net, request.destination, "destination");
  if (from == to) {
    throw Error(ErrorKind::InvalidRequest, "origin and destination resolve to the same node");
  }
  Route route = route_by_type(net, net.node(from).id, net.node(to).id, request.kind, city.weights(request.kind));
  const ModelParams* params = city.params();
  if (params == nullptr) throw Error(ErrorKind::MissingModel, "no trained model for city '" + city.name() + "'");

  RouteResponse resp;
  resp.kind = request.kind;
  resp.total_length = route.total_length_m;
  resp.model_version = city.model_version();
  resp.polyline.push_back(LatLon{net.node(from).lat, net.node(from).lon});
  for (SegmentId id : route.path) {
    const Node& n = net.node(net.to_index(*net.segment_index(id)));
    resp.polyline.push_back(LatLon{n.lat, n.lon});
  }
  // The model may extrapolate below zero on unseen inputs; ETAs are floored at one second.
  resp.eta = std::max(1.0, forward(*params, city.encoder().encode(route.path, request.depart_ts)));
  resp.path = std::move(route.path);
  return resp;
}

// ---------------------------------------------------------------------------
// service

Service Service::load(const ServiceConfig& config) {
  std::map<std::string, std::shared_ptr<const CityState>> cities;
  for (const auto& [name, paths] : config.cities) cities.emplace(name, CityState::load(name, paths, config));
  return Service(std::move(cities));
}

const CityState& Service::city(const std::string& name) const {
  auto it = cities_.find(name);
  if (it == cities_.end()) throw Error(ErrorKind::CityNotLoaded, "city '" + name + "' is not loaded");
  return *it->second;
}

std::vector<std::string> Service::city_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : cities_) out.push_back(name);
  return out;
}

RouteResponse Service::route(const RouteRequest& request) const { return handle_route(request, city(request.city)); }

HttpReply Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
  try {
    if (path == "/v1/health") {
      if (method != "GET") return {405, json{{"error", "MethodNotAllowed"}, {"message", "use GET"}}};
      return {200, json{{"status", "ok"}}};
    }
    if (path == "/v1/cities") {
      if (method != "GET") return {405, json{{"error", "MethodNotAllowed"}, {"message", "use GET"}}};
      json list = json::array();
      for (const auto& [name, c] : cities_) {
        list.push_back(json{{"name", name},
                            {"nodes", c->network().node_count()},
                            {"segments", c->network().segment_count()},
                            {"poi_weights", c->weights(RouteKind::Picturesque) != nullptr},
                            {"model_version", c->params() ? json(c->model_version()) : json(nullptr)}});
      }
      return {200, json{{"cities", list}}};
    }
    if (path == "/v1/route") {
      if (method != "POST") return {405, json{{"error", "MethodNotAllowed"}, {"message", "use POST"}}};
      json doc;
      try {
        doc = json::parse(body);
      } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidRequest, std::string("malformed JSON: ") + e.what());
      }
      return {200, route(RouteRequest::from_json(doc)).to_json()};
    }
    return {404, json{{"error", "NotFound"}, {"message", "no such endpoint: " + path}}};
  } catch (const Error& e) {
    return {http_status(e.kind()), json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}};
  } catch (const std::exception& e) {
    return {500, json{{"error", "Internal"}, {"message", e.what()}}};
  }
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpServer::Impl {
  const Service* service;
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply reply = impl_->service->handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json; charset=utf-8");
  };
  impl_->server.Get("/v1/.*", handler);
  impl_->server.Post("/v1/.*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorKind::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace transtte
