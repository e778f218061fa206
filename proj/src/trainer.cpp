#include "transtte/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "transtte/error.hpp"

namespace transtte {

namespace {

void set_target_scale(ModelParams& params, std::span<const Trip> trips) {
  double mean = 0.0;
  for (const auto& t : trips) mean += t.travel_time_s;
  mean /= static_cast<double>(trips.size());
  double var = 0.0;
  for (const auto& t : trips) var += (t.travel_time_s - mean) * (t.travel_time_s - mean);
  const double sd = std::sqrt(var / static_cast<double>(trips.size()));
  params.target_mean = mean;
  params.target_std = sd > 1e-9 ? sd : 1.0;
}

}  // namespace

std::vector<double> predict(const ModelParams& params, RouteEncoder& encoder, std::span<const Trip> trips) {
  std::vector<double> out(trips.size());
  for (std::size_t i = 0; i < trips.size(); ++i) {
    out[i] = forward(params, encoder.encode(trips[i].path, trips[i].depart_ts));
  }
  return out;
}

Metrics evaluate(const ModelParams& params, RouteEncoder& encoder, std::span<const Trip> trips) {
  if (trips.empty()) throw Error(ErrorKind::EmptyDataset, "evaluation set is empty");
  const std::vector<double> pred = predict(params, encoder, trips);
  std::vector<double> truth(trips.size());
  std::transform(trips.begin(), trips.end(), truth.begin(), [](const Trip& t) { return t.travel_time_s; });
  return Metrics{mae(pred, truth), rmse(pred, truth)};
}

TrainResult train(RouteEncoder& encoder, std::span<const Trip> train_set, std::span<const Trip> val_set,
                  const ModelConfig& cfg, const TrainHyper& hyper, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
  if (val_set.empty()) throw Error(ErrorKind::EmptyDataset, "validation set is empty");
  if (hyper.batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch_size must be positive");
  if (cfg.feature_dim != encoder.feature_dim() || cfg.max_hops != encoder.max_hops() ||
      cfg.max_degree != encoder.max_degree()) {
    throw Error(ErrorKind::ShapeMismatch, "model config does not match the route encoder");
  }

  ModelParams params = init_params(cfg);
  set_target_scale(params, train_set);
  OptimState state = OptimState::zeros(params.values.size(), hyper.optim);
  std::vector<double> grad(params.values.size());

  TrainResult result;
  result.params = params;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  std::size_t steps = 0;
  bool done = false;
  for (std::size_t epoch = 0; epoch < hyper.epochs && !done; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      std::vector<LabeledRoute> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Trip& t = train_set[order[k]];
        batch.push_back(LabeledRoute{encoder.encode(t.path, t.depart_ts), t.travel_time_s});
      }
      loss_sum += batch_gradient(params, batch, grad);
      adamw_step(params.values, grad, state);
      ++batches;
      ++steps;
      if (hyper.max_steps > 0 && steps >= hyper.max_steps) {
        done = true;
        break;
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.steps = steps;
    stats.train_loss = loss_sum / static_cast<double>(batches);
    stats.train_mae = evaluate(params, encoder, train_set).mae;
    stats.val_mae = evaluate(params, encoder, val_set).mae;
    result.history.push_back(stats);
    if (stats.val_mae < best_val) {
      best_val = stats.val_mae;
      result.params = params;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace transtte
