#include "sdf2net/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sdf2net {

namespace {

constexpr double kImprovementDelta = 1e-6;

void adam_update_plane(std::vector<double>& theta, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v,
                       double lr, double b1, double b2, double eps,
                       double bc1, double bc2) {
  const size_t n = theta.size();
  for (size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

int argmax_row(const std::vector<double>& probs, size_t row, size_t n) {
  size_t best = 0;
  for (size_t l = 1; l < n; ++l) {
    if (probs[row * n + l] > probs[row * n + best]) best = l;
  }
  return static_cast<int>(best) + 1;
}

}  // namespace

void adam_step_tensor(Param& p, uint64_t t, const TrainConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  adam_update_plane(p.value.re, p.grad.re, p.m.re, p.v.re, cfg.learning_rate,
                    cfg.beta1, cfg.beta2, cfg.epsilon, bc1, bc2);
  if (!p.real_only) {
    adam_update_plane(p.value.im, p.grad.im, p.m.im, p.v.im, cfg.learning_rate,
                      cfg.beta1, cfg.beta2, cfg.epsilon, bc1, bc2);
  }
}

void adam_step(Network& net, const TrainConfig& cfg) {
  ++net.adam_step_count;
  for (Param* p : net.params()) adam_step_tensor(*p, net.adam_step_count, cfg);
}

std::vector<int> predict_patches(Network& net, std::span<const Patch> patches,
                                 size_t batch_size) {
  std::vector<int> out(patches.size());
  const size_t n = net.config().num_classes;
  for (size_t first = 0; first < patches.size(); first += batch_size) {
    const size_t count = std::min(batch_size, patches.size() - first);
    ComplexTensor batch = assemble_batch(patches, first, count, nullptr);
    const std::vector<double> probs = net.forward(batch, /*training=*/false);
    for (size_t i = 0; i < count; ++i) out[first + i] = argmax_row(probs, i, n);
  }
  return out;
}

PatchEvaluation evaluate_patches(Network& net, std::span<const Patch> patches,
                                 size_t batch_size) {
  if (patches.empty()) throw std::invalid_argument("no patches to evaluate");
  const size_t n = net.config().num_classes;
  double loss_sum = 0.0;
  size_t correct = 0;
  std::vector<int> labels;
  for (size_t first = 0; first < patches.size(); first += batch_size) {
    const size_t count = std::min(batch_size, patches.size() - first);
    ComplexTensor batch = assemble_batch(patches, first, count, &labels);
    const std::vector<double> probs = net.forward(batch, /*training=*/false);
    for (size_t i = 0; i < count; ++i) {
      const double p = std::max(probs[i * n + (labels[i] - 1)], 1e-12);
      loss_sum -= std::log(p);
      if (argmax_row(probs, i, n) == labels[i]) ++correct;
    }
  }
  PatchEvaluation ev;
  ev.loss = loss_sum / static_cast<double>(patches.size());
  ev.oa = static_cast<double>(correct) / static_cast<double>(patches.size());
  return ev;
}

TrainLog fit(Network& net, const std::vector<Patch>& train_patches,
             const TrainConfig& cfg) {
  if (train_patches.empty()) throw std::runtime_error("no training data");
  if (cfg.patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0) {
    throw std::invalid_argument("validation_fraction must be in (0,1)");
  }

  // Stratified validation carve-out: per class, max(1, round(vf*count))
  // patches (capped so at least one training sample survives).
  std::vector<std::vector<size_t>> idx_by_class;
  for (size_t i = 0; i < train_patches.size(); ++i) {
    const size_t cls = static_cast<size_t>(train_patches[i].label);
    if (idx_by_class.size() < cls) idx_by_class.resize(cls);
    idx_by_class[cls - 1].push_back(i);
  }
  rng::Rng val_rng(rng::derive(cfg.seed, rng::stream::kValidation));
  std::vector<size_t> grad_idx, val_idx;
  for (std::vector<size_t>& idx : idx_by_class) {
    if (idx.empty()) continue;
    size_t n_val = 0;
    if (idx.size() > 1) {
      n_val = std::max<size_t>(
          1, static_cast<size_t>(std::llround(cfg.validation_fraction *
                                              static_cast<double>(idx.size()))));
      n_val = std::min(n_val, idx.size() - 1);
    }
    val_rng.shuffle(idx);
    val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + n_val);
    grad_idx.insert(grad_idx.end(), idx.begin() + n_val, idx.end());
  }
  std::sort(grad_idx.begin(), grad_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  if (grad_idx.empty()) throw std::runtime_error("no training data");

  std::vector<Patch> val_patches;
  for (size_t i : val_idx) val_patches.push_back(train_patches[i]);
  if (val_patches.empty()) {
    // single-sample classes only; fall back to monitoring the train patches
    for (size_t i : grad_idx) val_patches.push_back(train_patches[i]);
  }

  rng::Rng shuffle_rng(rng::derive(cfg.seed, rng::stream::kShuffle));
  rng::Rng dropout_rng(rng::derive(cfg.seed, rng::stream::kDropout));

  TrainLog log;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<ComplexTensor> best_values;
  int epochs_without_improvement = 0;

  std::vector<size_t> order = grad_idx;
  std::vector<Patch> batch_patches;
  std::vector<int> labels;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    double train_loss_sum = 0.0;
    for (size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const size_t count = std::min(cfg.batch_size, order.size() - first);
      // The shuffle picks batch membership; accumulation order inside the
      // batch is ascending original sample index.
      std::vector<size_t> members(order.begin() + first,
                                  order.begin() + first + count);
      std::sort(members.begin(), members.end());
      batch_patches.clear();
      for (size_t i : members) batch_patches.push_back(train_patches[i]);
      ComplexTensor batch = assemble_batch(batch_patches, 0, count, &labels);
      const double loss =
          net.loss_and_grads(batch, labels, /*training=*/true, &dropout_rng);
      adam_step(net, cfg);
      train_loss_sum += loss * static_cast<double>(count);
    }

    const PatchEvaluation val = evaluate_patches(net, val_patches, cfg.batch_size);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss_sum / static_cast<double>(order.size());
    rec.val_loss = val.loss;
    rec.val_oa = val.oa;
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    log.epochs.push_back(rec);

    if (val.loss < best_loss - kImprovementDelta) {
      best_loss = val.loss;
      log.best_epoch = epoch;
      epochs_without_improvement = 0;
      best_values.clear();
      for (const Param* p : std::as_const(net).params()) best_values.push_back(p->value);
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= cfg.patience) {
        log.stopped_early = true;
        break;
      }
    }
  }

  // revert to the best weights
  if (!best_values.empty()) {
    std::vector<Param*> params = net.params();
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  }
  net.best_val_loss = best_loss;
  return log;
}

void write_trainlog_csv(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write train log: " + path.string());
  os << "epoch,train_loss,val_loss,val_oa\n";
  char buf[128];
  for (const EpochRecord& r : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_oa);
    os << buf;
  }
}

}  // namespace sdf2net
