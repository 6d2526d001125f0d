#include "sdf2net/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "sdf2net/preprocess.hpp"

namespace sdf2net {

namespace {

size_t reflect3(ptrdiff_t q, size_t n) {
  if (n == 1) return 0;
  if (q < 0) q = -q;
  if (q >= static_cast<ptrdiff_t>(n)) q = 2 * static_cast<ptrdiff_t>(n) - 2 - q;
  return static_cast<size_t>(q);
}

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(std::max(0.0, var / static_cast<double>(xs.size())));
}

// One train/evaluate run; returns overall accuracy on the test split.
double run_trial(const CoherencyImage& normalized, const LabelMap& map,
                 size_t window, double ratio, const SweepSettings& settings,
                 uint64_t trial_seed) {
  const SplitSpec split =
      stratified_split(map, ratio, rng::derive(trial_seed, rng::stream::kSplit));
  auto [train_patches, test_patches] = build_dataset(normalized, map, split, window);

  ModelConfig mc = settings.model;
  mc.window = window;
  mc.num_classes = map.num_classes;
  Network net(mc, rng::derive(trial_seed, rng::stream::kInit));

  TrainConfig tc = settings.train;
  tc.seed = trial_seed;
  fit(net, train_patches, tc);
  return evaluate_patches(net, test_patches, tc.batch_size).oa;
}

std::vector<SweepRow> sweep_generic(const CoherencyImage& image,
                                    const LabelMap& map,
                                    const std::vector<double>& values,
                                    const SweepSettings& settings,
                                    bool value_is_window) {
  if (settings.trials == 0) throw std::invalid_argument("trials must be >= 1");
  const CoherencyImage normalized = normalize_channels(image);
  const uint64_t sweep_seed = rng::derive(settings.seed, rng::stream::kSweep);

  std::vector<SweepRow> rows;
  for (size_t vi = 0; vi < values.size(); ++vi) {
    std::vector<double> oas;
    for (size_t trial = 0; trial < settings.trials; ++trial) {
      const uint64_t trial_seed =
          rng::derive(sweep_seed, vi * 1000 + trial + 1);
      const size_t window =
          value_is_window ? static_cast<size_t>(values[vi]) : settings.window;
      const double ratio = value_is_window ? settings.ratio : values[vi];
      oas.push_back(run_trial(normalized, map, window, ratio, settings, trial_seed));
    }
    double mean = 0.0;
    for (double oa : oas) mean += oa;
    mean /= static_cast<double>(oas.size());
    rows.push_back({values[vi], mean, population_std(oas)});
  }
  return rows;
}

}  // namespace

LabelMap classify_image(Network& net, const CoherencyImage& image,
                        size_t batch_size) {
  const ModelConfig& cfg = net.config();
  LabelMap out(image.height, image.width,
               static_cast<uint16_t>(cfg.num_classes));
  const size_t total = image.pixel_count();
  const size_t n = cfg.num_classes;

  std::vector<double> probs;
  ComplexTensor batch;
  for (size_t first = 0; first < total; first += batch_size) {
    const size_t count = std::min(batch_size, total - first);
    batch = ComplexTensor({count, cfg.window, cfg.window, kCoherencyChannels});
    const size_t stride = cfg.window * cfg.window * kCoherencyChannels;
    for (size_t i = 0; i < count; ++i) {
      const size_t px = first + i;
      const ComplexTensor patch =
          extract_patch(image, px / image.width, px % image.width, cfg.window);
      std::copy(patch.re.begin(), patch.re.end(), batch.re.begin() + i * stride);
      std::copy(patch.im.begin(), patch.im.end(), batch.im.begin() + i * stride);
    }
    probs = net.forward(batch, /*training=*/false);
    for (size_t i = 0; i < count; ++i) {
      size_t best = 0;
      for (size_t l = 1; l < n; ++l) {
        if (probs[i * n + l] > probs[i * n + best]) best = l;
      }
      out.labels[first + i] = static_cast<uint16_t>(best + 1);
    }
  }
  return out;
}

EvalReport metrics_from_confusion(const std::vector<uint64_t>& counts,
                                  size_t num_classes) {
  if (counts.size() != num_classes * num_classes) {
    throw std::invalid_argument("confusion matrix size mismatch");
  }
  EvalReport r;
  r.num_classes = num_classes;
  r.confusion = counts;

  std::vector<uint64_t> row_sum(num_classes, 0), col_sum(num_classes, 0);
  uint64_t trace = 0;
  for (size_t i = 0; i < num_classes; ++i) {
    for (size_t j = 0; j < num_classes; ++j) {
      const uint64_t c = counts[i * num_classes + j];
      row_sum[i] += c;
      col_sum[j] += c;
      r.total += c;
      if (i == j) trace += c;
    }
  }
  if (r.total == 0) throw std::runtime_error("no evaluated pixels");

  const double total = static_cast<double>(r.total);
  r.oa = static_cast<double>(trace) / total;
  r.per_class_accuracy.resize(num_classes, 0.0);
  double aa = 0.0;
  for (size_t i = 0; i < num_classes; ++i) {
    r.per_class_accuracy[i] =
        row_sum[i] ? static_cast<double>(counts[i * num_classes + i]) /
                         static_cast<double>(row_sum[i])
                   : 0.0;
    aa += r.per_class_accuracy[i];
  }
  r.aa = aa / static_cast<double>(num_classes);

  double pe = 0.0;
  for (size_t i = 0; i < num_classes; ++i) {
    pe += static_cast<double>(row_sum[i]) / total *
          static_cast<double>(col_sum[i]) / total;
  }
  r.kappa = pe < 1.0 ? (r.oa - pe) / (1.0 - pe) : 1.0;
  return r;
}

EvalReport compute_metrics(const LabelMap& predicted, const LabelMap& reference) {
  if (predicted.height != reference.height || predicted.width != reference.width) {
    throw std::runtime_error("dimension mismatch");
  }
  const size_t n = std::max(predicted.num_classes, reference.num_classes);
  std::vector<uint64_t> counts(n * n, 0);
  for (size_t i = 0; i < reference.pixel_count(); ++i) {
    const uint16_t ref = reference.labels[i];
    if (ref == 0) continue;
    const uint16_t pred = predicted.labels[i];
    if (pred == 0) {
      throw std::runtime_error("prediction unlabeled at a labeled reference pixel");
    }
    ++counts[(pred - 1) * n + (ref - 1)];
  }
  return metrics_from_confusion(counts, n);
}

LabelMap median_filter_classmap(const LabelMap& map) {
  LabelMap out(map.height, map.width, map.num_classes);
  uint16_t window[9];
  for (size_t r = 0; r < map.height; ++r) {
    for (size_t c = 0; c < map.width; ++c) {
      size_t k = 0;
      for (ptrdiff_t dr = -1; dr <= 1; ++dr) {
        const size_t sr = reflect3(static_cast<ptrdiff_t>(r) + dr, map.height);
        for (ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const size_t sc = reflect3(static_cast<ptrdiff_t>(c) + dc, map.width);
          window[k++] = map.at(sr, sc);
        }
      }
      std::nth_element(window, window + 4, window + 9);
      out.set(r, c, window[4]);
    }
  }
  return out;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "confusion matrix (rows = predicted, cols = reference):\n";
  for (size_t i = 0; i < r.num_classes; ++i) {
    for (size_t j = 0; j < r.num_classes; ++j) {
      os << (j ? " " : "") << r.count(i, j);
    }
    os << "\n";
  }
  char buf[64];
  os << "per-class accuracy (%):";
  for (double a : r.per_class_accuracy) {
    std::snprintf(buf, sizeof(buf), " %.2f", a * 100.0);
    os << buf;
  }
  os << "\n";
  std::snprintf(buf, sizeof(buf), "OA = %.2f\n", r.oa * 100.0);
  os << buf;
  std::snprintf(buf, sizeof(buf), "AA = %.2f\n", r.aa * 100.0);
  os << buf;
  std::snprintf(buf, sizeof(buf), "kappa = %.2f\n", r.kappa * 100.0);
  os << buf;
  return os.str();
}

std::vector<SweepRow> sweep_windows(const CoherencyImage& image,
                                    const LabelMap& map,
                                    const std::vector<size_t>& windows,
                                    const SweepSettings& settings) {
  std::vector<double> values;
  for (size_t w : windows) {
    if (w < 3 || w % 2 == 0) throw std::invalid_argument("window must be odd and >= 3");
    values.push_back(static_cast<double>(w));
  }
  return sweep_generic(image, map, values, settings, /*value_is_window=*/true);
}

std::vector<SweepRow> sweep_ratios(const CoherencyImage& image,
                                   const LabelMap& map,
                                   const std::vector<double>& ratios,
                                   const SweepSettings& settings) {
  return sweep_generic(image, map, ratios, settings, /*value_is_window=*/false);
}

}  // namespace sdf2net
