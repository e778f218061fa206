#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "transtte/adamw.hpp"
#include "transtte/encoding.hpp"
#include "transtte/model.hpp"
#include "transtte/trip_pipeline.hpp"

namespace transtte {

struct TrainHyper {
  AdamWHyper optim;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::size_t max_steps = 0;  // 0 = no cap
};

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t steps = 0;  // cumulative optimizer steps
  double train_loss = 0.0;
  double train_mae = 0.0;
  double val_mae = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
  ModelParams params;  // parameters of the epoch with the lowest val MAE
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch AdamW on the standardized Huber loss. Batches are re-encoded
/// each epoch through the encoder, whose cache serves the spatial encodings.
/// Deterministic in cfg.seed. Throws EmptyDataset.
TrainResult train(RouteEncoder& encoder, std::span<const Trip> train_set, std::span<const Trip> val_set,
                  const ModelConfig& cfg, const TrainHyper& hyper, const EpochCallback& on_epoch = {});

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
};

std::vector<double> predict(const ModelParams& params, RouteEncoder& encoder, std::span<const Trip> trips);

/// MAE / RMSE in seconds over forward predictions. Throws EmptyDataset.
Metrics evaluate(const ModelParams& params, RouteEncoder& encoder, std::span<const Trip> trips);

}  // namespace transtte
