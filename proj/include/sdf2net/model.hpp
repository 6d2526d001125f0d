#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdf2net/layers.hpp"

namespace sdf2net {

enum class Branch : int { kShallow = 1, kMedium = 2, kDeep = 3 };
enum class Attention { kNone, kBeforeFusion, kAfterFusion };

const char* branch_name(Branch b);
const char* attention_name(Attention a);

/// Static description of the three-branch network. Serializes to the
/// key=value text block embedded in checkpoints.
struct ModelConfig {
  size_t window = 13;
  size_t in_channels = 6;
  size_t num_classes = 0;
  size_t filters_per_layer = 16;
  std::vector<Branch> branches = {Branch::kShallow, Branch::kMedium, Branch::kDeep};
  Attention attention = Attention::kAfterFusion;
  size_t se_reduction = 4;
  double dropout_rate = 0.25;
  std::vector<size_t> fc_sizes = {128, 64};

  size_t fused_channels() const { return filters_per_layer * branches.size(); }
  size_t flatten_length() const {
    return window * window * in_channels * fused_channels();
  }

  /// Throws std::invalid_argument on a malformed config (even window, empty
  /// branch set, reduction not dividing the gated channel count, ...).
  void validate() const;

  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
};

/// The assembled network: per-branch stacks of [conv -> crelu], channel
/// fusion, optional SE attention (per branch or after fusion), flatten, and
/// the dense classifier head ending in a magnitude softmax.
class Network {
 public:
  Network(ModelConfig cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }

  /// batch is [B, w, w, in_channels] complex; returns row-major B x N class
  /// probabilities. Deterministic when training is false.
  std::vector<double> forward(const ComplexTensor& batch, bool training = false,
                              rng::Rng* dropout_rng = nullptr);

  /// Forward + cross-entropy + full backward; gradients are zeroed first and
  /// left in the params. labels are 1-based. Returns the batch-mean loss.
  double loss_and_grads(const ComplexTensor& batch, const std::vector<int>& labels,
                        bool training = false, rng::Rng* dropout_rng = nullptr);

  /// Loss without gradient work (finite-difference probes, validation).
  double loss_only(const ComplexTensor& batch, const std::vector<int>& labels,
                   bool training = false, rng::Rng* dropout_rng = nullptr);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  Param* find_param(const std::string& name);
  void zero_grads();

  /// Trainable real coordinate count (complex tensors count twice).
  size_t coordinate_count() const;

  /// Named intermediate shapes recorded by the last forward pass.
  const std::vector<std::pair<std::string, std::vector<size_t>>>& last_shapes() const {
    return shapes_;
  }

  uint64_t adam_step_count = 0;
  double best_val_loss = 0.0;  // +inf until fit() observes a validation loss

 private:
  ComplexTensor run(const ComplexTensor& batch, bool training, rng::Rng* rng);
  void backward(const ComplexTensor& d_logits);

  struct BranchPipe {
    Branch id;
    std::vector<Conv3dLayer> convs;
    std::vector<CReluLayer> acts;
    std::optional<SeBlock> se;
  };

  ModelConfig cfg_;
  std::vector<BranchPipe> branches_;
  std::optional<SeBlock> fused_se_;
  std::vector<DenseLayer> fcs_;
  std::vector<CReluLayer> fc_acts_;
  std::vector<DropoutLayer> drops_;
  std::vector<std::pair<std::string, std::vector<size_t>>> shapes_;
  std::vector<size_t> pre_flatten_shape_;
  size_t last_batch_ = 0;
};

}  // namespace sdf2net
