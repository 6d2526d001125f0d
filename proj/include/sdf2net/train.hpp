#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sdf2net/model.hpp"
#include "sdf2net/preprocess.hpp"

namespace sdf2net {

struct TrainConfig {
  double learning_rate = 1e-3;
  size_t batch_size = 64;
  int max_epochs = 250;
  int patience = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 0;
  double validation_fraction = 0.1;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_oa = 0.0;
  double elapsed_ms = 0.0;  // wall clock; kept out of the CSV on purpose
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

/// One Adam update of every parameter from the gradients currently stored in
/// them. Complex parameters update their real and imaginary planes as
/// independent coordinates; increments net.adam_step_count.
void adam_step(Network& net, const TrainConfig& cfg);

/// Single-tensor Adam update with bias correction (t is the 1-based step).
void adam_step_tensor(Param& p, uint64_t t, const TrainConfig& cfg);

/// Mini-batch Adam loop with early stopping on validation loss and
/// best-weights restoration. A stratified validation_fraction of the train
/// patches is carved off before training and never used for gradients.
/// Stops after `patience` consecutive epochs without the validation loss
/// improving by at least 1e-6, or at max_epochs; the network is left holding
/// the parameters of the best epoch.
TrainLog fit(Network& net, const std::vector<Patch>& train_patches,
             const TrainConfig& cfg);

struct PatchEvaluation {
  double loss = 0.0;
  double oa = 0.0;
};

/// Inference-mode cross-entropy and overall accuracy over a patch list.
PatchEvaluation evaluate_patches(Network& net, std::span<const Patch> patches,
                                 size_t batch_size);

/// Argmax class ids (1-based, ties to the lowest index) for a patch list.
std::vector<int> predict_patches(Network& net, std::span<const Patch> patches,
                                 size_t batch_size);

void write_trainlog_csv(const TrainLog& log, const std::filesystem::path& path);

}  // namespace sdf2net
