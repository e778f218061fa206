// Writes a synthetic grid city (network, trips, POIs) plus a ready-to-use
// config.json, for trying the CLI without private data.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "transtte/error.hpp"
#include "transtte/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic TTE dataset", "transtte-synth"};
  std::string out_dir = "synth";
  std::string city = "gridtown";
  std::size_t rows = 10, cols = 20, trips = 2000, pois = 60;
  double noisy = 0.1;
  std::uint64_t seed = 1;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--city", city, "city name used in config.json");
  app.add_option("--rows", rows, "grid rows");
  app.add_option("--cols", cols, "grid columns");
  app.add_option("--trips", trips, "number of trips");
  app.add_option("--pois", pois, "number of POIs");
  app.add_option("--noisy-fraction", noisy, "share of trips with a non-zero rebuild count");
  app.add_option("--seed", seed, "random seed");
  CLI11_PARSE(app, argc, argv);

  try {
    namespace syn = transtte::synthetic;
    syn::GridSpec grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.seed = seed;
    const auto network = syn::grid_network(grid);
    syn::TripSpec ts;
    ts.count = trips;
    ts.noisy_fraction = noisy;
    ts.seed = seed + 1;
    const auto trip_list = syn::trips(network, ts);
    const auto poi_list = syn::pois(network, pois, seed + 2);
    const std::filesystem::path dir(out_dir);
    syn::write_dataset(dir / city, network, trip_list, poi_list);

    nlohmann::json cfg{
        {"cities",
         {{city,
           {{"nodes", city + "/nodes.csv"},
            {"edges", city + "/edges.csv"},
            {"trips", city + "/trips.csv"},
            {"pois", city + "/pois.csv"},
            {"model", city + "/model.tte"}}}}},
        {"filter",
         {{"max_rebuild_count", 0}, {"min_length_m", 500}, {"max_length_m", 50000}, {"min_time_s", 60},
          {"max_time_s", 7200}}},
        {"poi_radius_m", 100},
        {"categories", {{"picturesque", {"nature", "culture"}}, {"historic", {"historic"}}}},
        {"model", {{"preset", "toy"}, {"seed", 7}}},
        {"train", {{"lr", 3e-3}, {"batch_size", 16}, {"epochs", 20}, {"test_fraction", 0.2}, {"split_seed", 42}}}};
    std::ofstream(dir / "config.json") << cfg.dump(2) << '\n';
    std::cout << "wrote " << (dir / city).string() << " and " << (dir / "config.json").string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
