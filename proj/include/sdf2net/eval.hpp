#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdf2net/image.hpp"
#include "sdf2net/model.hpp"
#include "sdf2net/train.hpp"

namespace sdf2net {

/// Confusion matrix (rows = predicted class, columns = reference class) plus
/// the scalar scores derived from it. Unlabeled reference pixels are excluded
/// from every count.
struct EvalReport {
  size_t num_classes = 0;
  std::vector<uint64_t> confusion;  // row-major N x N
  uint64_t total = 0;
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  std::vector<double> per_class_accuracy;  // diag / predicted-row sum

  uint64_t count(size_t predicted, size_t reference) const {
    return confusion[predicted * num_classes + reference];
  }
};

/// Classifies every pixel of a (normalized) image with the trained network;
/// argmax over the class probabilities, ties broken toward the lowest class
/// index. The returned map has no unlabeled pixels.
LabelMap classify_image(Network& net, const CoherencyImage& image,
                        size_t batch_size = 64);

EvalReport compute_metrics(const LabelMap& predicted, const LabelMap& reference);

/// Builds an EvalReport directly from an N x N count matrix (row-major,
/// rows = predicted). Used when the matrix itself is the starting point.
EvalReport metrics_from_confusion(const std::vector<uint64_t>& counts,
                                  size_t num_classes);

/// 3x3 median filter over class indices; the window is mirror-padded at the
/// borders and the median of nine values is the fifth order statistic.
/// Unlabeled pixels participate as the value 0.
LabelMap median_filter_classmap(const LabelMap& map);

/// Text table: confusion counts plus the three scalars as percentages with
/// two decimals.
std::string format_report(const EvalReport& report);

// --------------------------------------------------------------------------
// Sweep experiments: repeated train/evaluate runs over a hyperparameter list
// with derived per-trial seeds, reporting mean and population std of the
// test overall accuracy.
// --------------------------------------------------------------------------

struct SweepRow {
  double value = 0.0;
  double mean_oa = 0.0;
  double std_oa = 0.0;
};

struct SweepSettings {
  ModelConfig model;       // window/num_classes overridden per run as needed
  TrainConfig train;
  double ratio = 0.01;     // split ratio for window sweeps
  size_t window = 13;      // patch window for ratio sweeps
  size_t trials = 1;
  uint64_t seed = 0;
};

std::vector<SweepRow> sweep_windows(const CoherencyImage& image,
                                    const LabelMap& map,
                                    const std::vector<size_t>& windows,
                                    const SweepSettings& settings);

std::vector<SweepRow> sweep_ratios(const CoherencyImage& image,
                                   const LabelMap& map,
                                   const std::vector<double>& ratios,
                                   const SweepSettings& settings);

}  // namespace sdf2net
