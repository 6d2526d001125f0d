#include "sdf2net/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sdf2net {

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::kShallow: return "shallow";
    case Branch::kMedium: return "medium";
    case Branch::kDeep: return "deep";
  }
  return "?";
}

const char* attention_name(Attention a) {
  switch (a) {
    case Attention::kNone: return "none";
    case Attention::kBeforeFusion: return "before_fusion";
    case Attention::kAfterFusion: return "after_fusion";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("window must be odd and >= 3");
  }
  if (branches.empty()) throw std::invalid_argument("branch set must be nonempty");
  std::vector<Branch> sorted = branches;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate branch");
  }
  if (num_classes == 0) throw std::invalid_argument("num_classes must be >= 1");
  if (in_channels == 0 || filters_per_layer == 0) {
    throw std::invalid_argument("channel counts must be positive");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("dropout rate must be in [0,1)");
  }
  if (attention == Attention::kAfterFusion && fused_channels() % se_reduction != 0) {
    throw std::invalid_argument("bad reduction: r must divide the fused channel count");
  }
  if (attention == Attention::kBeforeFusion && filters_per_layer % se_reduction != 0) {
    throw std::invalid_argument("bad reduction: r must divide the per-branch channel count");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "window=" << window << "\n";
  os << "in_channels=" << in_channels << "\n";
  os << "num_classes=" << num_classes << "\n";
  os << "filters_per_layer=" << filters_per_layer << "\n";
  os << "branches=";
  for (size_t i = 0; i < branches.size(); ++i) {
    os << (i ? "," : "") << branch_name(branches[i]);
  }
  os << "\n";
  os << "attention=" << attention_name(attention) << "\n";
  os << "se_reduction=" << se_reduction << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", dropout_rate);
  os << "dropout_rate=" << buf << "\n";
  os << "fc_sizes=";
  for (size_t i = 0; i < fc_sizes.size(); ++i) os << (i ? "," : "") << fc_sizes[i];
  os << "\n";
  return os.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  cfg.branches.clear();
  cfg.fc_sizes.clear();
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "window") cfg.window = std::stoul(val);
    else if (key == "in_channels") cfg.in_channels = std::stoul(val);
    else if (key == "num_classes") cfg.num_classes = std::stoul(val);
    else if (key == "filters_per_layer") cfg.filters_per_layer = std::stoul(val);
    else if (key == "se_reduction") cfg.se_reduction = std::stoul(val);
    else if (key == "dropout_rate") cfg.dropout_rate = std::stod(val);
    else if (key == "attention") {
      if (val == "none") cfg.attention = Attention::kNone;
      else if (val == "before_fusion") cfg.attention = Attention::kBeforeFusion;
      else if (val == "after_fusion") cfg.attention = Attention::kAfterFusion;
      else throw std::invalid_argument("unknown attention placement: " + val);
    } else if (key == "branches") {
      for (const std::string& tok : split_csv(val)) {
        if (tok == "shallow") cfg.branches.push_back(Branch::kShallow);
        else if (tok == "medium") cfg.branches.push_back(Branch::kMedium);
        else if (tok == "deep") cfg.branches.push_back(Branch::kDeep);
        else throw std::invalid_argument("unknown branch: " + tok);
      }
    } else if (key == "fc_sizes") {
      for (const std::string& tok : split_csv(val)) cfg.fc_sizes.push_back(std::stoul(tok));
    }
    // unknown keys are ignored
  }
  cfg.validate();
  return cfg;
}

Network::Network(ModelConfig cfg, uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  best_val_loss = std::numeric_limits<double>::infinity();

  const size_t f = cfg_.filters_per_layer;
  for (Branch id : cfg_.branches) {
    BranchPipe pipe;
    pipe.id = id;
    const size_t depth = static_cast<size_t>(id);
    for (size_t i = 0; i < depth; ++i) {
      const std::string name = std::string(branch_name(id)) + ".conv" + std::to_string(i);
      pipe.convs.emplace_back(name, 3, i == 0 ? 1 : f, f);
      pipe.convs.back().need_input_grad = i != 0;
      pipe.acts.emplace_back();
    }
    if (cfg_.attention == Attention::kBeforeFusion) {
      pipe.se.emplace(std::string(branch_name(id)) + ".se", f, cfg_.se_reduction);
    }
    branches_.push_back(std::move(pipe));
  }
  if (cfg_.attention == Attention::kAfterFusion) {
    fused_se_.emplace("fusion.se", cfg_.fused_channels(), cfg_.se_reduction);
  }

  size_t fan_in = cfg_.flatten_length();
  for (size_t i = 0; i < cfg_.fc_sizes.size(); ++i) {
    fcs_.emplace_back("fc" + std::to_string(i), fan_in, cfg_.fc_sizes[i]);
    fc_acts_.emplace_back();
    drops_.emplace_back(cfg_.dropout_rate);
    fan_in = cfg_.fc_sizes[i];
  }
  fcs_.emplace_back("fc" + std::to_string(cfg_.fc_sizes.size()), fan_in, cfg_.num_classes);

  rng::Rng rng(init_seed);
  for (BranchPipe& pipe : branches_) {
    for (Conv3dLayer& conv : pipe.convs) conv.init(rng);
    if (pipe.se) pipe.se->init(rng);
  }
  if (fused_se_) fused_se_->init(rng);
  for (DenseLayer& fc : fcs_) fc.init(rng);
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (BranchPipe& pipe : branches_) {
    for (Conv3dLayer& conv : pipe.convs) {
      out.push_back(&conv.w);
      out.push_back(&conv.b);
    }
    if (pipe.se) {
      out.push_back(&pipe.se->w1);
      out.push_back(&pipe.se->w2);
    }
  }
  if (fused_se_) {
    out.push_back(&fused_se_->w1);
    out.push_back(&fused_se_->w2);
  }
  for (DenseLayer& fc : fcs_) {
    out.push_back(&fc.w);
    out.push_back(&fc.b);
  }
  return out;
}

std::vector<const Param*> Network::params() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<Network*>(this)->params()) out.push_back(p);
  return out;
}

Param* Network::find_param(const std::string& name) {
  for (Param* p : params()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void Network::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

size_t Network::coordinate_count() const {
  size_t n = 0;
  for (const Param* p : params()) n += p->coordinate_count();
  return n;
}

ComplexTensor Network::run(const ComplexTensor& batch, bool training, rng::Rng* rng) {
  if (batch.rank() != 4 || batch.dim(1) != cfg_.window ||
      batch.dim(2) != cfg_.window || batch.dim(3) != cfg_.in_channels) {
    throw std::invalid_argument("shape error: batch must be [B, window, window, channels]");
  }
  last_batch_ = batch.dim(0);
  shapes_.clear();
  shapes_.emplace_back("input", batch.shape);

  // [B, w, w, 6] -> [B, H=w, W=w, D=6, C=1]
  ComplexTensor x = batch.reshaped(
      {last_batch_, cfg_.window, cfg_.window, cfg_.in_channels, 1});

  std::vector<ComplexTensor> branch_outs;
  branch_outs.reserve(branches_.size());
  for (size_t bi = 0; bi < branches_.size(); ++bi) {
    BranchPipe& pipe = branches_[bi];
    ComplexTensor a = bi + 1 == branches_.size() ? std::move(x) : x;
    for (size_t i = 0; i < pipe.convs.size(); ++i) {
      a = pipe.convs[i].forward(std::move(a));
      a = pipe.acts[i].forward(std::move(a));
    }
    if (pipe.se) a = pipe.se->forward(std::move(a));
    shapes_.emplace_back(branch_name(pipe.id), a.shape);
    branch_outs.push_back(std::move(a));
  }

  std::vector<const ComplexTensor*> ptrs;
  for (const ComplexTensor& t : branch_outs) ptrs.push_back(&t);
  ComplexTensor fused = branch_outs.size() == 1 ? std::move(branch_outs[0])
                                                : concat_channels(ptrs);
  shapes_.emplace_back("fused", fused.shape);
  if (fused_se_) fused = fused_se_->forward(std::move(fused));

  pre_flatten_shape_ = fused.shape;
  fused.set_shape({last_batch_, cfg_.flatten_length()});
  ComplexTensor f = std::move(fused);
  shapes_.emplace_back("flatten", f.shape);

  for (size_t i = 0; i < fcs_.size(); ++i) {
    f = fcs_[i].forward(std::move(f));
    if (i + 1 < fcs_.size()) {
      f = fc_acts_[i].forward(std::move(f));
      f = drops_[i].forward(std::move(f), training, rng);
    }
    shapes_.emplace_back("fc" + std::to_string(i), f.shape);
  }
  return f;  // complex logits [B, N]
}

void Network::backward(const ComplexTensor& d_logits) {
  ComplexTensor g = d_logits;
  for (size_t i = fcs_.size(); i-- > 0;) {
    if (i + 1 < fcs_.size()) {
      g = drops_[i].backward(g);
      g = fc_acts_[i].backward(g);
    }
    g = fcs_[i].backward(g);
  }
  g.set_shape(pre_flatten_shape_);
  if (fused_se_) g = fused_se_->backward(g);

  const size_t f = cfg_.filters_per_layer;
  for (size_t bi = 0; bi < branches_.size(); ++bi) {
    BranchPipe& pipe = branches_[bi];
    ComplexTensor gb = branches_.size() == 1
                           ? std::move(g)
                           : slice_channels(g, bi * f, f);
    if (pipe.se) gb = pipe.se->backward(gb);
    for (size_t i = pipe.convs.size(); i-- > 0;) {
      gb = pipe.acts[i].backward(gb);
      gb = pipe.convs[i].backward(gb);
    }
    // gb is now the (unused) gradient w.r.t. the input batch
  }
}

std::vector<double> Network::forward(const ComplexTensor& batch, bool training,
                                     rng::Rng* dropout_rng) {
  return magnitude_softmax(run(batch, training, dropout_rng));
}

double Network::loss_and_grads(const ComplexTensor& batch,
                               const std::vector<int>& labels, bool training,
                               rng::Rng* dropout_rng) {
  zero_grads();
  ComplexTensor logits = run(batch, training, dropout_rng);
  ComplexTensor d_logits;
  const double loss = magnitude_softmax_ce(logits, labels, &d_logits);
  backward(d_logits);
  return loss;
}

double Network::loss_only(const ComplexTensor& batch, const std::vector<int>& labels,
                          bool training, rng::Rng* dropout_rng) {
  ComplexTensor logits = run(batch, training, dropout_rng);
  return magnitude_softmax_ce(logits, labels, nullptr);
}

}  // namespace sdf2net
