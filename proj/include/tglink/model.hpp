#pragma once

#include <optional>
#include <vector>

#include "tglink/nn.hpp"

namespace tglink {

// Stage layout of the classifier. Defaults mirror the production network:
// stem 3x3 conv to 64, three expansion-1 fused blocks, seven expansion-4
// fused blocks, 1x1 head conv to 1280, global average pooling, 2-way FC.
// Every stage is stride 1 / same padding so feature maps stay l x l and the
// class activation map aligns with link slots.
struct NetSpec {
  int in_channels = 5;
  int width = 64;
  int head_channels = 1280;
  int stage1_layers = 3;
  int stage2_layers = 7;
  int stage2_expansion = 4;
  int classes = 2;
};

template <typename T>
class EffNet {
 public:
  explicit EffNet(const NetSpec& spec)
      : spec_(spec),
        stem_(spec.in_channels, spec.width, 3, "stem.conv"),
        stem_bn_(spec.width, "stem.bn"),
        head_(spec.width, spec.head_channels, 1, "head.conv"),
        head_bn_(spec.head_channels, "head.bn"),
        fc_(spec.head_channels, spec.classes, "fc") {
    for (int i = 0; i < spec.stage1_layers; ++i) {
      stage1_.emplace_back(spec.width, 1, "stage1." + std::to_string(i));
    }
    for (int i = 0; i < spec.stage2_layers; ++i) {
      stage2_.emplace_back(spec.width, spec.stage2_expansion, "stage2." + std::to_string(i));
    }
  }

  void init(Rng& rng) {
    stem_.init(rng);
    for (auto& b : stage1_) b.init(rng);
    for (auto& b : stage2_) b.init(rng);
    head_.init(rng);
    fc_.init(rng);
  }

  // x: (in_channels) x (batch * l * l). Returns logits (classes x batch),
  // ordered (negative, positive).
  const MatX<T>& forward(const MatX<T>& x, int l, int batch, bool training,
                         bool update_running = true) {
    if (x.rows() != spec_.in_channels ||
        x.cols() != static_cast<Eigen::Index>(batch) * l * l) {
      throw std::invalid_argument("EffNet::forward: input shape mismatch");
    }
    l_ = l;
    batch_ = batch;
    const MatX<T>* cur = &silu_stem_.forward(
        stem_bn_.forward(stem_.forward(x, l, batch), training, update_running));
    for (auto& b : stage1_) cur = &b.forward(*cur, l, batch, training, update_running);
    for (auto& b : stage2_) cur = &b.forward(*cur, l, batch, training, update_running);
    const MatX<T>& head_act = silu_head_.forward(
        head_bn_.forward(head_.forward(*cur, l, batch), training, update_running));
    return fc_.forward(pool_.forward(head_act, l * l, batch));
  }

  // d_logits: (classes x batch). Returns the gradient w.r.t. the input image.
  MatX<T> backward(const MatX<T>& d_logits) {
    MatX<T> d = head_.backward(
        head_bn_.backward(silu_head_.backward(pool_.backward(fc_.backward(d_logits)))));
    for (auto it = stage2_.rbegin(); it != stage2_.rend(); ++it) d = it->backward(d);
    for (auto it = stage1_.rbegin(); it != stage1_.rend(); ++it) d = it->backward(d);
    return stem_.backward(stem_bn_.backward(silu_stem_.backward(d)));
  }

  // Class activation map of sample b from the last forward pass:
  // sum_k fc_weight(cls, k) * feature_k(x, y), an l x l matrix.
  MatX<T> cam_map(int cls, int b) const {
    const int s = l_ * l_;
    const MatX<T>& feats = silu_head_.output();
    Eigen::Matrix<T, 1, Eigen::Dynamic> flat =
        fc_.weight().row(cls) * feats.middleCols(static_cast<Eigen::Index>(b) * s, s);
    MatX<T> map(l_, l_);
    for (int i = 0; i < l_; ++i) {
      for (int j = 0; j < l_; ++j) map(i, j) = flat(i * l_ + j);
    }
    return map;
  }

  void collect_params(std::vector<ParamRef<T>>& out) {
    stem_.collect_params(out);
    stem_bn_.collect_params(out);
    for (auto& b : stage1_) b.collect_params(out);
    for (auto& b : stage2_) b.collect_params(out);
    head_.collect_params(out);
    head_bn_.collect_params(out);
    fc_.collect_params(out);
  }

  void collect_state(std::vector<ParamRef<T>>& out) {
    stem_bn_.collect_state(out);
    for (auto& b : stage1_) b.collect_state(out);
    for (auto& b : stage2_) b.collect_state(out);
    head_bn_.collect_state(out);
  }

  const NetSpec& spec() const { return spec_; }
  // Stage-3 activations from the last forward (head_channels x batch*l*l).
  const MatX<T>& features() const { return silu_head_.output(); }
  Linear<T>& fc() { return fc_; }
  std::vector<FusedBlock<T>>& stage1() { return stage1_; }
  std::vector<FusedBlock<T>>& stage2() { return stage2_; }

 private:
  NetSpec spec_;
  Conv2d<T> stem_;
  BatchNorm<T> stem_bn_;
  SiLU<T> silu_stem_;
  std::vector<FusedBlock<T>> stage1_;
  std::vector<FusedBlock<T>> stage2_;
  Conv2d<T> head_;
  BatchNorm<T> head_bn_;
  SiLU<T> silu_head_;
  Linear<T> fc_;
  GlobalAvgPool<T> pool_;
  int l_ = 0, batch_ = 0;
};

// Per-slot importance from a class activation map: row sum plus column sum,
// the diagonal counted once. Pad slots report no value.
template <typename T>
std::vector<std::optional<double>> link_importance(const MatX<T>& cam, int pad_count) {
  const int l = static_cast<int>(cam.rows());
  std::vector<std::optional<double>> scores(static_cast<size_t>(l));
  for (int i = 0; i < l; ++i) {
    if (i < pad_count) continue;
    const double row = static_cast<double>(cam.row(i).sum());
    const double col = static_cast<double>(cam.col(i).sum());
    scores[static_cast<size_t>(i)] = row + col - static_cast<double>(cam(i, i));
  }
  return scores;
}

}  // namespace tglink
