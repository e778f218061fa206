#pragma once

// Fixtures and independent reference computations shared by the unit and
// acceptance suites. Nothing here calls into the code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "transtte/encoding.hpp"
#include "transtte/error.hpp"
#include "transtte/geo.hpp"
#include "transtte/model.hpp"
#include "transtte/poi_index.hpp"
#include "transtte/road_graph.hpp"

namespace transtte::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  // per-process so parallel ctest runs of one binary don't collide
  auto dir = std::filesystem::temp_directory_path() /
             ("transtte_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Runs fn and returns the kind of the transtte::Error it throws. Throws
/// std::logic_error when fn returns normally.
inline ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected a transtte::Error");
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline Segment make_segment(std::int64_t id, std::int64_t from, std::int64_t to, double length = 100.0,
                            double speed = 36.0, std::vector<double> features = {}) {
  Segment s;
  s.id = SegmentId{id};
  s.from = NodeId{from};
  s.to = NodeId{to};
  s.length_m = length;
  s.speed_kmh = speed;
  s.features = std::move(features);
  return s;
}

/// Nodes 1..n spaced ~100 m apart along a parallel, edges k -> k+1 with id k.
inline RoadNetwork chain_network(std::size_t n) {
  std::vector<Node> nodes;
  std::vector<Segment> segs;
  for (std::size_t i = 1; i <= n; ++i) nodes.push_back(Node{NodeId{static_cast<std::int64_t>(i)}, 55.0, 73.0 + 0.0016 * i});
  for (std::size_t i = 1; i < n; ++i) {
    segs.push_back(make_segment(static_cast<std::int64_t>(i), static_cast<std::int64_t>(i),
                                static_cast<std::int64_t>(i + 1), 100.0, 36.0, {1.0, static_cast<double>(i)}));
  }
  return RoadNetwork::build(std::move(nodes), std::move(segs), {"f0", "f1"});
}

/// Directed graph where the base-time cost of each edge equals its length.
inline RoadNetwork cost_network(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges) {
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    nodes.push_back(Node{NodeId{static_cast<std::int64_t>(i)}, 55.0 + 0.001 * static_cast<double>(i), 73.0});
  }
  std::vector<Segment> segs;
  std::int64_t id = 100;
  for (const auto& [a, b, c] : edges) {
    segs.push_back(make_segment(id++, static_cast<std::int64_t>(a), static_cast<std::int64_t>(b), c, 3.6));
  }
  return RoadNetwork::build(std::move(nodes), std::move(segs), {});
}

inline RoadNetwork random_cost_network(std::mt19937_64& rng, std::size_t n, double edge_prob,
                                       std::vector<double>* costs_out = nullptr) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cost(1, 9);
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || u(rng) >= edge_prob) continue;
      edges.emplace_back(a, b, static_cast<double>(cost(rng)));
      // occasional parallel edge
      if (u(rng) < 0.1) edges.emplace_back(a, b, static_cast<double>(cost(rng)));
    }
  }
  if (costs_out) {
    costs_out->clear();
    for (const auto& e : edges) costs_out->push_back(std::get<2>(e));
  }
  return cost_network(n, edges);
}

/// Minimum path cost by exhaustive simple-path enumeration (infinity if none).
inline double brute_force_min_cost(const RoadNetwork& net, std::size_t src, std::size_t dst,
                                   const std::vector<double>& costs) {
  if (src == dst) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> on_path(net.node_count(), false);
  std::function<void(std::size_t, double)> dfs = [&](std::size_t u, double acc) {
    if (u == dst) {
      best = std::min(best, acc);
      return;
    }
    on_path[u] = true;
    for (std::size_t s = 0; s < net.segment_count(); ++s) {
      if (net.from_index(s) != u) continue;
      const std::size_t v = net.to_index(s);
      if (!on_path[v]) dfs(v, acc + costs[s]);
    }
    on_path[u] = false;
  };
  dfs(src, 0.0);
  return best;
}

/// Floyd-Warshall hop distances; -1 for unreachable.
inline std::vector<int> floyd_warshall_hops(const AdjacencyList& adj) {
  const std::size_t n = adj.size();
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  std::vector<int> d(n * n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    d[i * n + i] = 0;
    for (auto j : adj[i]) d[i * n + j] = std::min(d[i * n + j], 1);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  for (auto& v : d) if (v >= kInf) v = -1;
  return d;
}

inline AdjacencyList random_adjacency(std::mt19937_64& rng, std::size_t n, double p, bool undirected) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AdjacencyList adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = undirected ? i + 1 : 0; j < n; ++j) {
      if (i == j || u(rng) >= p) continue;
      adj[i].push_back(static_cast<std::uint32_t>(j));
      if (undirected) adj[j].push_back(static_cast<std::uint32_t>(i));
    }
  }
  return adj;
}

/// Point-to-chord distance by dense sampling along the chord (linear in
/// lat/lon) with great-circle distances.
inline double sampled_distance_m(double plat, double plon, double alat, double alon, double blat, double blon,
                                 int samples = 10000) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    best = std::min(best, geo::haversine_m(plat, plon, alat + t * (blat - alat), alon + t * (blon - alon)));
  }
  return best;
}

/// Two routes from node 1 to node 5: a short corridor 1 -> 2 -> 5 and a
/// longer corridor 1 -> 3 -> 4 -> 5 about 330 m to the north.
struct TwoCorridor {
  RoadNetwork network;
  std::vector<Poi> pois;  // nature/culture on corridor 2, historic on corridor 1
};

inline TwoCorridor two_corridor() {
  std::vector<Node> nodes{{NodeId{1}, 55.000, 73.000}, {NodeId{2}, 55.000, 73.005},
                          {NodeId{3}, 55.003, 73.002}, {NodeId{4}, 55.003, 73.008},
                          {NodeId{5}, 55.000, 73.010}};
  std::vector<Segment> segs{make_segment(11, 1, 2, 320.0, 40.0), make_segment(12, 2, 5, 320.0, 40.0),
                            make_segment(21, 1, 3, 360.0, 40.0), make_segment(22, 3, 4, 385.0, 40.0),
                            make_segment(23, 4, 5, 360.0, 40.0)};
  TwoCorridor fx{RoadNetwork::build(nodes, segs, {}), {}};
  std::int64_t id = 1;
  auto mid = [&](std::int64_t a, std::int64_t b) {
    const Node& na = nodes[static_cast<std::size_t>(a - 1)];
    const Node& nb = nodes[static_cast<std::size_t>(b - 1)];
    return std::pair{(na.lat + nb.lat) / 2, (na.lon + nb.lon) / 2};
  };
  for (auto [a, b] : {std::pair<std::int64_t, std::int64_t>{1, 3}, {3, 4}, {4, 5}}) {
    auto [lat, lon] = mid(a, b);
    for (int k = 0; k < 3; ++k) {
      fx.pois.push_back(Poi{PoiId{id++}, lat + 0.0001 * k, lon, k % 2 ? PoiCategory::Culture : PoiCategory::Nature});
    }
  }
  for (auto [a, b] : {std::pair<std::int64_t, std::int64_t>{1, 2}, {2, 5}}) {
    auto [lat, lon] = mid(a, b);
    fx.pois.push_back(Poi{PoiId{id++}, lat, lon, PoiCategory::Historic});
  }
  return fx;
}

/// Random EncodedRoute for a model config; phi from a random undirected graph.
inline EncodedRoute random_route(std::mt19937_64& rng, const ModelConfig& cfg, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> deg(0, cfg.max_degree + 3);
  EncodedRoute r;
  r.features = Matrix(n, cfg.feature_dim);
  for (auto& v : r.features.data) v = normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    r.centrality.in_bucket.push_back(static_cast<std::uint16_t>(std::min<int>(deg(rng), cfg.max_degree)));
    r.centrality.out_bucket.push_back(static_cast<std::uint16_t>(std::min<int>(deg(rng), cfg.max_degree)));
  }
  const AdjacencyList adj = random_adjacency(rng, n, 0.5, true);
  r.spatial = std::make_shared<const SpatialEncodingTable>(shortest_hop_distances(adj, cfg.max_hops));
  std::uniform_int_distribution<std::int64_t> ts(1606780800, 1606780800 + 30 * 86400);
  r.time = time_features(ts(rng));
  return r;
}

/// Fills every parameter with N(0, scale) noise so no tensor sits at a
/// special value (zero bias, unit gain).
inline void randomize(ModelParams& p, std::mt19937_64& rng, double scale = 0.3) {
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& v : p.values) v = normal(rng);
  for (const auto& ls : p.layout.layers) {
    for (const Slot* s : {&ls.ln1_gain, &ls.ln2_gain}) {
      for (std::size_t i = 0; i < s->size(); ++i) p.values[s->offset + i] += 1.0;
    }
  }
}

/// Scaled dot-product multi-head attention written as plain loops straight
/// from the definition, reading weights from the flat parameter vector.
/// `with_bias` toggles the spatial bias term.
inline Matrix naive_attention(const ModelParams& p, std::size_t layer, const Matrix& x,
                              const SpatialEncodingTable& phi, bool with_bias,
                              std::vector<Matrix>* probs_out = nullptr) {
  const auto& cfg = p.config;
  const auto& ls = p.layout.layers[layer];
  const std::size_t n = x.rows, d = cfg.width, dh = d / cfg.heads;
  auto W = [&](const Slot& s, std::size_t r, std::size_t c) { return p.values[s.offset + r * s.cols + c]; };
  Matrix q(n, d), k(n, d), v(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t a = 0; a < d; ++a) {
        q(i, c) += x(i, a) * W(ls.wq, a, c);
        k(i, c) += x(i, a) * W(ls.wk, a, c);
        v(i, c) += x(i, a) * W(ls.wv, a, c);
      }
  Matrix concat(n, d);
  if (probs_out) probs_out->clear();
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Matrix prob(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n);
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q(i, h * dh + c) * k(j, h * dh + c);
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        if (with_bias) s[j] += W(p.layout.spatial_bias, h, phi(i, j));
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < n; ++j) prob(i, j) = s[j] / z;
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < dh; ++c) concat(i, h * dh + c) += prob(i, j) * v(j, h * dh + c);
    }
    if (probs_out) probs_out->push_back(prob);
  }
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t a = 0; a < d; ++a) out(i, c) += concat(i, a) * W(ls.wo, a, c);
  return out;
}

/// Whole forward pass as plain loops: embedding, pre-norm blocks with
/// naive_attention, mean pooling, time features, readout MLP. Returns the
/// standardized prediction.
inline double naive_forward(const ModelParams& p, const EncodedRoute& r) {
  const auto& cfg = p.config;
  const auto& L = p.layout;
  const std::size_t n = r.node_count(), d = cfg.width, f = cfg.ffn_width();
  auto W = [&](const Slot& s, std::size_t i, std::size_t j) { return p.values[s.offset + i * s.cols + j]; };
  auto gelu = [](double x) { return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / std::numbers::pi) * (x + 0.044715 * x * x * x))); };
  auto norm = [&](const Matrix& x, const Slot& g, const Slot& b) {
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
      double mean = 0.0, var = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) mean += x(i, c) / static_cast<double>(x.cols);
      for (std::size_t c = 0; c < x.cols; ++c) var += (x(i, c) - mean) * (x(i, c) - mean) / static_cast<double>(x.cols);
      for (std::size_t c = 0; c < x.cols; ++c) y(i, c) = (x(i, c) - mean) / std::sqrt(var + 1e-5) * W(g, 0, c) + W(b, 0, c);
    }
    return y;
  };
  Matrix h(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      double s = W(L.in_proj_b, 0, c) + W(L.z_in, r.centrality.in_bucket[i], c) + W(L.z_out, r.centrality.out_bucket[i], c);
      for (std::size_t a = 0; a < cfg.feature_dim; ++a) s += r.features(i, a) * W(L.in_proj_w, a, c);
      h(i, c) = s;
    }
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const auto& ls = L.layers[l];
    const Matrix a = naive_attention(p, l, norm(h, ls.ln1_gain, ls.ln1_shift), *r.spatial, true);
    for (std::size_t k = 0; k < h.data.size(); ++k) h.data[k] += a.data[k];
    const Matrix u = norm(h, ls.ln2_gain, ls.ln2_shift);
    Matrix next = h;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> hidden(f);
      for (std::size_t c = 0; c < f; ++c) {
        double s = W(ls.ffn_b1, 0, c);
        for (std::size_t a2 = 0; a2 < d; ++a2) s += u(i, a2) * W(ls.ffn_w1, a2, c);
        hidden[c] = gelu(s);
      }
      for (std::size_t c = 0; c < d; ++c) {
        double s = W(ls.ffn_b2, 0, c);
        for (std::size_t a2 = 0; a2 < f; ++a2) s += hidden[a2] * W(ls.ffn_w2, a2, c);
        next(i, c) += s;
      }
    }
    h = next;
  }
  std::vector<double> z(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < n; ++i) z[c] += h(i, c);
    z[c] /= static_cast<double>(n);
  }
  z.insert(z.end(), r.time.begin(), r.time.end());
  double y = W(L.readout_b2, 0, 0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = W(L.readout_b1, 0, c);
    for (std::size_t a = 0; a < z.size(); ++a) s += z[a] * W(L.readout_w1, a, c);
    y += gelu(s) * W(L.readout_w2, c, 0);
  }
  return y;
}

/// Mean Huber loss of a batch, recomputed from forward passes.
inline double batch_loss(const ModelParams& p, std::span<const LabeledRoute> batch) {
  double total = 0.0;
  for (const auto& s : batch) {
    const double y = forward_normalized(p, s.route);
    total += huber(y - (s.travel_time_s - p.target_mean) / p.target_std);
  }
  return total / static_cast<double>(batch.size());
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences over every parameter. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor); both zero counts
/// as zero error.
inline GradCheck finite_difference_check(ModelParams p, std::span<const LabeledRoute> batch,
                                         std::span<const double> analytic, double step, double floor) {
  GradCheck out;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double orig = p.values[i];
    p.values[i] = orig + step;
    const double up = batch_loss(p, batch);
    p.values[i] = orig - step;
    const double down = batch_loss(p, batch);
    p.values[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double diff = std::abs(analytic[i] - numeric);
    const double rel = diff == 0.0 ? 0.0 : diff / denom;
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = i;
      out.worst_analytic = analytic[i];
      out.worst_numeric = numeric;
    }
    ++out.checked;
  }
  return out;
}

}  // namespace transtte::testing
