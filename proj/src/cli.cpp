#include <cstdlib>
#include <ctime>
#include <iostream>

#include <CLI11.hpp>

#include "transtte/error.hpp"
#include "transtte/service.hpp"

namespace transtte {

using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string city;
  std::string from, to, kind = "fastest";
  std::int64_t depart_ts = -1;
  std::string split = "test";
  std::string host = "0.0.0.0";
  int port = 8080;
};

ServiceConfig load_config(const Options& opt) {
  std::string path = opt.config;
  if (path.empty()) {
    if (const char* env = std::getenv("TRANSTTE_CONFIG")) path = env;
  }
  if (path.empty()) throw Error(ErrorKind::UsageError, "no config: pass --config or set TRANSTTE_CONFIG");
  return ServiceConfig::load(path);
}

std::vector<std::string> selected_cities(const ServiceConfig& cfg, const Options& opt) {
  if (!opt.city.empty()) {
    if (!cfg.cities.count(opt.city)) throw Error(ErrorKind::CityNotLoaded, "city '" + opt.city + "' not in config");
    return {opt.city};
  }
  std::vector<std::string> out;
  for (const auto& [name, _] : cfg.cities) out.push_back(name);
  return out;
}

const std::filesystem::path& require(const std::optional<std::filesystem::path>& p, const std::string& what,
                                     const std::string& city) {
  if (!p) throw Error(ErrorKind::InvalidConfig, "city '" + city + "' has no " + what + " path");
  return *p;
}

struct CityData {
  RoadNetwork network;
  std::vector<Trip> all;
  std::vector<Trip> kept;
};

CityData load_city_trips(const ServiceConfig& cfg, const std::string& name) {
  const CityPaths& paths = cfg.cities.at(name);
  CityData d{load_network(paths.nodes, paths.edges), {}, {}};
  d.all = load_trips(require(paths.trips, "trips", name), d.network);
  d.kept = filter_trips(d.all, cfg.filter);
  return d;
}

int run_ingest(const Options& opt, std::ostream& out) {
  const ServiceConfig cfg = load_config(opt);
  json report = json::array();
  for (const auto& name : selected_cities(cfg, opt)) {
    const CityPaths& paths = cfg.cities.at(name);
    RoadNetwork network = load_network(paths.nodes, paths.edges);
    json city{{"city", name}, {"nodes", network.node_count()}, {"segments", network.segment_count()},
              {"features", network.feature_count()}};
    if (paths.trips) {
      const auto trips = load_trips(*paths.trips, network);
      const auto kept = filter_trips(trips, cfg.filter);
      city["trips"] = trips.size();
      city["kept"] = kept.size();
      city["dropped"] = trips.size() - kept.size();
    }
    if (paths.pois) {
      const auto pois = load_pois(*paths.pois);
      const auto w = segment_weights(network, pois, cfg.poi_radius_m, CategorySet::all());
      city["pois"] = pois.size();
      city["segments_near_poi"] =
          std::count_if(w.counts.begin(), w.counts.end(), [](std::uint32_t c) { return c > 0; });
    }
    report.push_back(city);
  }
  out << report.dump(2) << '\n';
  return 0;
}

struct Splits {
  std::vector<Trip> train, val, test;
};

Splits make_splits(const ServiceConfig& cfg, std::span<const Trip> kept) {
  Split outer = split(kept, cfg.train.test_fraction, cfg.train.split_seed);
  Split inner = split(outer.train, cfg.train.val_fraction, cfg.train.split_seed + 1);
  return Splits{std::move(inner.train), std::move(inner.test), std::move(outer.test)};
}

int run_train(const Options& opt, std::ostream& out, std::ostream& err) {
  const ServiceConfig cfg = load_config(opt);
  json report = json::array();
  for (const auto& name : selected_cities(cfg, opt)) {
    const auto& model_path = require(cfg.cities.at(name).model, "model", name);
    CityData data = load_city_trips(cfg, name);
    Splits s = make_splits(cfg, data.kept);
    RouteEncoder encoder(data.network, cfg.model.max_hops, cfg.model.max_degree, cfg.cache_entries);
    const ModelConfig model_cfg = cfg.model.resolve(static_cast<std::uint32_t>(encoder.feature_dim()));
    err << name << ": training on " << s.train.size() << " trips (" << s.val.size() << " val, "
        << s.test.size() << " test)\n";
    TrainResult result = train(encoder, s.train, s.val, model_cfg, cfg.train.hyper, [&](const EpochStats& e) {
      err << name << " epoch " << e.epoch << " steps " << e.steps << " loss " << e.train_loss << " train_mae "
          << e.train_mae << " val_mae " << e.val_mae << '\n';
    });
    save_params(result.params, model_path);

    const Metrics test = evaluate(result.params, encoder, s.test);
    std::vector<double> baseline(s.test.size(), result.params.target_mean), truth;
    for (const auto& t : s.test) truth.push_back(t.travel_time_s);
    report.push_back(json{{"city", name},
                          {"model", model_path.string()},
                          {"model_version", model_version(result.params)},
                          {"best_epoch", result.best_epoch},
                          {"train_mae", evaluate(result.params, encoder, s.train).mae},
                          {"test_mae", test.mae},
                          {"test_rmse", test.rmse},
                          {"baseline_test_mae", mae(baseline, truth)},
                          {"cache_hits", encoder.cache().hits()},
                          {"cache_misses", encoder.cache().misses()}});
  }
  out << report.dump(2) << '\n';
  return 0;
}

int run_eval(const Options& opt, std::ostream& out) {
  const ServiceConfig cfg = load_config(opt);
  if (opt.split != "train" && opt.split != "test" && opt.split != "all") {
    throw Error(ErrorKind::UsageError, "--split must be train, test or all");
  }
  json report = json::array();
  for (const auto& name : selected_cities(cfg, opt)) {
    const auto& model_path = require(cfg.cities.at(name).model, "model", name);
    if (!std::filesystem::exists(model_path)) {
      throw Error(ErrorKind::MissingModel, "no checkpoint at " + model_path.string() + "; run train first");
    }
    const ModelParams params = load_params(model_path);
    CityData data = load_city_trips(cfg, name);
    std::vector<Trip> trips;
    if (opt.split == "all") {
      trips = data.kept;
    } else {
      Splits s = make_splits(cfg, data.kept);
      trips = opt.split == "train" ? std::move(s.train) : std::move(s.test);
    }
    RouteEncoder encoder(data.network, params.config.max_hops, params.config.max_degree, cfg.cache_entries);
    const Metrics m = evaluate(params, encoder, trips);
    report.push_back(json{{"city", name}, {"split", opt.split}, {"trips", trips.size()}, {"mae", m.mae},
                          {"rmse", m.rmse}, {"model_version", model_version(params)}});
  }
  out << report.dump(2) << '\n';
  return 0;
}

int run_route(const Options& opt, std::ostream& out) {
  const ServiceConfig cfg = load_config(opt);
  RouteRequest req;
  req.origin = parse_endpoint(opt.from);
  req.destination = parse_endpoint(opt.to);
  const auto kind = parse_route_kind(opt.kind);
  if (!kind) throw Error(ErrorKind::UsageError, "--kind must be fastest, picturesque or historic");
  req.kind = *kind;
  req.city = opt.city;
  req.depart_ts = opt.depart_ts >= 0 ? opt.depart_ts : static_cast<std::int64_t>(std::time(nullptr));
  auto it = cfg.cities.find(req.city);
  if (it == cfg.cities.end()) throw Error(ErrorKind::CityNotLoaded, "city '" + req.city + "' not in config");
  const auto city = CityState::load(req.city, it->second, cfg);
  out << handle_route(req, *city).to_json().dump(2) << '\n';
  return 0;
}

int run_serve(const Options& opt, std::ostream& err) {
  const ServiceConfig cfg = load_config(opt);
  const Service service = Service::load(cfg);
  HttpServer server(service);
  const int port = server.bind(opt.host, opt.port);
  err << "listening on " << opt.host << ":" << port << '\n';
  server.listen();
  return 0;
}

}  // namespace

int cli_dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Travel-time estimation and themed routing over road networks", "transtte"};
  app.require_subcommand(1);
  Options opt;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config (default: $TRANSTTE_CONFIG)");
  };
  auto* ingest = app.add_subcommand("ingest", "validate datasets and report filter statistics");
  add_config(ingest);
  ingest->add_option("--city", opt.city, "restrict to one city");

  auto* train_cmd = app.add_subcommand("train", "train a model per city and save the checkpoint");
  add_config(train_cmd);
  train_cmd->add_option("--city", opt.city, "restrict to one city");

  auto* eval_cmd = app.add_subcommand("eval", "report MAE / RMSE of a saved model");
  add_config(eval_cmd);
  eval_cmd->add_option("--city", opt.city, "restrict to one city");
  eval_cmd->add_option("--split", opt.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));

  auto* route_cmd = app.add_subcommand("route", "print a route with its ETA as JSON");
  add_config(route_cmd);
  route_cmd->add_option("--from", opt.from, "origin: node id or lat,lon")->required();
  route_cmd->add_option("--to", opt.to, "destination: node id or lat,lon")->required();
  route_cmd->add_option("--kind", opt.kind, "fastest, picturesque or historic")
      ->check(CLI::IsMember({"fastest", "picturesque", "historic"}));
  route_cmd->add_option("--city", opt.city, "city name")->required();
  route_cmd->add_option("--depart", opt.depart_ts, "departure, unix seconds (default: now)");

  auto* serve = app.add_subcommand("serve", "start the HTTP API");
  add_config(serve);
  serve->add_option("--host", opt.host, "bind address");
  serve->add_option("--port", opt.port, "port (0 = any free port)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();  // program name
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) return run_ingest(opt, out);
    if (*train_cmd) return run_train(opt, out, err);
    if (*eval_cmd) return run_eval(opt, out);
    if (*route_cmd) return run_route(opt, out);
    if (*serve) return run_serve(opt, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::UsageError) {
      err << app.help();
      return 2;
    }
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace transtte
