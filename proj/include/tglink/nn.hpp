#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tglink/encoder.hpp"  // MatX/VecX aliases
#include "tglink/rng.hpp"

namespace tglink {

// Named view over a flat parameter (or state buffer) and its gradient.
template <typename T>
struct ParamRef {
  std::string name;
  T* value = nullptr;
  T* grad = nullptr;  // null for non-trainable state buffers
  Eigen::Index size = 0;
};

// Activations are (channels) x (batch * l * l) matrices; column b*S + i*l + j
// holds all channels of pixel (i, j) of sample b. Layers keep a pointer to
// their forward input, so inputs must stay alive until backward().

// Same-size convolution, stride 1, no bias (a BatchNorm always follows).
template <typename T>
class Conv2d {
 public:
  Conv2d(int in_ch, int out_ch, int ksize, std::string name)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), name_(std::move(name)) {
    if (ksize != 1 && ksize != 3) throw std::invalid_argument("Conv2d: kernel must be 1 or 3");
    weight_.resize(out_ch_, in_ch_ * k_ * k_);
    d_weight_ = MatX<T>::Zero(out_ch_, in_ch_ * k_ * k_);
  }

  void init(Rng& rng) {
    const T std = std::sqrt(T(2) / static_cast<T>(in_ch_ * k_ * k_));
    for (Eigen::Index i = 0; i < weight_.rows(); ++i) {
      for (Eigen::Index j = 0; j < weight_.cols(); ++j) {
        weight_(i, j) = static_cast<T>(rng.gaussian()) * std;
      }
    }
  }

  const MatX<T>& forward(const MatX<T>& x, int l, int batch) {
    input_ = &x;
    l_ = l;
    batch_ = batch;
    if (k_ == 1) {
      output_.noalias() = weight_ * x;
    } else {
      im2col(x, cols_);
      output_.noalias() = weight_ * cols_;
    }
    return output_;
  }

  MatX<T> backward(const MatX<T>& d_out) {
    if (k_ == 1) {
      d_weight_.noalias() += d_out * input_->transpose();
      return weight_.transpose() * d_out;
    }
    im2col(*input_, cols_);  // recomputed to keep the forward workspace small
    d_weight_.noalias() += d_out * cols_.transpose();
    MatX<T> d_cols = weight_.transpose() * d_out;
    MatX<T> d_x = MatX<T>::Zero(in_ch_, input_->cols());
    col2im(d_cols, d_x);
    return d_x;
  }

  void collect_params(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".weight", weight_.data(), d_weight_.data(), weight_.size()});
  }

  MatX<T>& weight() { return weight_; }
  const MatX<T>& weight() const { return weight_; }
  int out_channels() const { return out_ch_; }

 private:
  void im2col(const MatX<T>& x, MatX<T>& cols) const {
    const int l = l_;
    const int s = l * l;
    cols.setZero(in_ch_ * 9, x.cols());
    for (int b = 0; b < batch_; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * s;
      for (int di = 0; di < 3; ++di) {
        for (int dj = 0; dj < 3; ++dj) {
          const Eigen::Index row_off = static_cast<Eigen::Index>(di * 3 + dj) * in_ch_;
          const int j0 = std::max(0, 1 - dj);
          const int j1 = std::min(l, l + 1 - dj);
          if (j1 <= j0) continue;
          for (int i = 0; i < l; ++i) {
            const int si = i + di - 1;
            if (si < 0 || si >= l) continue;
            cols.block(row_off, base + i * l + j0, in_ch_, j1 - j0) =
                x.block(0, base + si * l + (j0 + dj - 1), in_ch_, j1 - j0);
          }
        }
      }
    }
  }

  void col2im(const MatX<T>& d_cols, MatX<T>& d_x) const {
    const int l = l_;
    const int s = l * l;
    for (int b = 0; b < batch_; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * s;
      for (int di = 0; di < 3; ++di) {
        for (int dj = 0; dj < 3; ++dj) {
          const Eigen::Index row_off = static_cast<Eigen::Index>(di * 3 + dj) * in_ch_;
          const int j0 = std::max(0, 1 - dj);
          const int j1 = std::min(l, l + 1 - dj);
          if (j1 <= j0) continue;
          for (int i = 0; i < l; ++i) {
            const int si = i + di - 1;
            if (si < 0 || si >= l) continue;
            d_x.block(0, base + si * l + (j0 + dj - 1), in_ch_, j1 - j0) +=
                d_cols.block(row_off, base + i * l + j0, in_ch_, j1 - j0);
          }
        }
      }
    }
  }

  int in_ch_, out_ch_, k_;
  std::string name_;
  MatX<T> weight_, d_weight_;
  const MatX<T>* input_ = nullptr;
  int l_ = 0, batch_ = 0;
  MatX<T> cols_;
  MatX<T> output_;
};

// Per-channel batch statistics during training, running averages at
// inference. Normalization uses biased variance; running variance stores the
// unbiased estimate.
template <typename T>
class BatchNorm {
 public:
  BatchNorm(int channels, std::string name) : channels_(channels), name_(std::move(name)) {
    gamma_ = VecX<T>::Ones(channels);
    beta_ = VecX<T>::Zero(channels);
    running_mean_ = VecX<T>::Zero(channels);
    running_var_ = VecX<T>::Ones(channels);
    d_gamma_ = VecX<T>::Zero(channels);
    d_beta_ = VecX<T>::Zero(channels);
  }

  const MatX<T>& forward(const MatX<T>& x, bool training, bool update_running = true) {
    input_ = &x;
    training_ = training;
    const auto n = static_cast<T>(x.cols());
    if (training) {
      mean_ = x.rowwise().mean();
      VecX<T> var = (x.array().square().rowwise().mean()).matrix() -
                    mean_.array().square().matrix();
      var = var.cwiseMax(T(0));
      invstd_ = (var.array() + eps_).rsqrt();
      if (update_running) {
        const T unbias = n > 1 ? n / (n - 1) : T(1);
        running_mean_ = (T(1) - momentum_) * running_mean_ + momentum_ * mean_;
        running_var_ = (T(1) - momentum_) * running_var_ + momentum_ * (var * unbias);
      }
    } else {
      mean_ = running_mean_;
      invstd_ = (running_var_.array() + eps_).rsqrt();
    }
    const VecX<T> scale = gamma_.cwiseProduct(invstd_);
    const VecX<T> shift = beta_ - mean_.cwiseProduct(scale);
    output_ = (x.array().colwise() * scale.array()).colwise() + shift.array();
    return output_;
  }

  MatX<T> backward(const MatX<T>& d_out) {
    const MatX<T>& x = *input_;
    const auto n = static_cast<T>(x.cols());
    // xhat recomputed from the saved input and cached stats.
    MatX<T> xhat = (x.array().colwise() - mean_.array()).colwise() * invstd_.array();
    const VecX<T> d_beta_batch = d_out.rowwise().sum();
    const VecX<T> d_gamma_batch = (d_out.array() * xhat.array()).rowwise().sum();
    d_beta_ += d_beta_batch;
    d_gamma_ += d_gamma_batch;
    const VecX<T> scale = gamma_.cwiseProduct(invstd_);
    if (!training_) {
      return d_out.array().colwise() * scale.array();
    }
    // dx = scale/n * (n*dout - dbeta - xhat * dgamma)
    MatX<T> d_x =
        (d_out * n).array() - (xhat.array().colwise() * d_gamma_batch.array());
    d_x = d_x.array().colwise() - d_beta_batch.array();
    d_x = d_x.array().colwise() * (scale / n).array();
    return d_x;
  }

  void collect_params(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".gamma", gamma_.data(), d_gamma_.data(), gamma_.size()});
    out.push_back({name_ + ".beta", beta_.data(), d_beta_.data(), beta_.size()});
  }

  void collect_state(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".running_mean", running_mean_.data(), nullptr, running_mean_.size()});
    out.push_back({name_ + ".running_var", running_var_.data(), nullptr, running_var_.size()});
  }

  VecX<T>& gamma() { return gamma_; }
  VecX<T>& beta() { return beta_; }

 private:
  int channels_;
  std::string name_;
  VecX<T> gamma_, beta_, running_mean_, running_var_;
  VecX<T> d_gamma_, d_beta_;
  VecX<T> mean_, invstd_;
  const MatX<T>* input_ = nullptr;
  bool training_ = false;
  MatX<T> output_;
  T eps_ = T(1e-5);
  T momentum_ = T(0.1);
};

// Smooth gated activation x * sigmoid(x).
template <typename T>
class SiLU {
 public:
  const MatX<T>& forward(const MatX<T>& x) {
    input_ = &x;
    sig_ = (T(1) / (T(1) + (-x.array()).exp())).matrix();
    output_ = x.cwiseProduct(sig_);
    return output_;
  }

  MatX<T> backward(const MatX<T>& d_out) const {
    const MatX<T>& x = *input_;
    return d_out.array() * (sig_.array() * (T(1) + x.array() * (T(1) - sig_.array())));
  }

  const MatX<T>& output() const { return output_; }

 private:
  const MatX<T>* input_ = nullptr;
  MatX<T> sig_;
  MatX<T> output_;
};

template <typename T>
class Linear {
 public:
  Linear(int in, int out, std::string name) : in_(in), out_(out), name_(std::move(name)) {
    weight_.resize(out, in);
    bias_ = VecX<T>::Zero(out);
    d_weight_ = MatX<T>::Zero(out, in);
    d_bias_ = VecX<T>::Zero(out);
  }

  void init(Rng& rng) {
    const T std = T(1) / std::sqrt(static_cast<T>(in_));
    for (Eigen::Index i = 0; i < weight_.rows(); ++i) {
      for (Eigen::Index j = 0; j < weight_.cols(); ++j) {
        weight_(i, j) = static_cast<T>(rng.gaussian()) * std;
      }
    }
  }

  const MatX<T>& forward(const MatX<T>& x) {
    input_ = &x;
    output_ = (weight_ * x).colwise() + bias_;
    return output_;
  }

  MatX<T> backward(const MatX<T>& d_out) {
    d_weight_.noalias() += d_out * input_->transpose();
    d_bias_ += d_out.rowwise().sum();
    return weight_.transpose() * d_out;
  }

  void collect_params(std::vector<ParamRef<T>>& out) {
    out.push_back({name_ + ".weight", weight_.data(), d_weight_.data(), weight_.size()});
    out.push_back({name_ + ".bias", bias_.data(), d_bias_.data(), bias_.size()});
  }

  MatX<T>& weight() { return weight_; }
  const MatX<T>& weight() const { return weight_; }
  VecX<T>& bias() { return bias_; }

 private:
  int in_, out_;
  std::string name_;
  MatX<T> weight_, d_weight_;
  VecX<T> bias_, d_bias_;
  const MatX<T>* input_ = nullptr;
  MatX<T> output_;
};

// Global average pooling over the spatial extent of each sample.
template <typename T>
class GlobalAvgPool {
 public:
  // x: (C x batch*S) -> (C x batch)
  const MatX<T>& forward(const MatX<T>& x, int spatial, int batch) {
    spatial_ = spatial;
    output_.resize(x.rows(), batch);
    for (int b = 0; b < batch; ++b) {
      output_.col(b) =
          x.middleCols(static_cast<Eigen::Index>(b) * spatial, spatial).rowwise().mean();
    }
    return output_;
  }

  MatX<T> backward(const MatX<T>& d_out) const {
    const int batch = static_cast<int>(d_out.cols());
    MatX<T> d_x(d_out.rows(), static_cast<Eigen::Index>(batch) * spatial_);
    const T inv = T(1) / static_cast<T>(spatial_);
    for (int b = 0; b < batch; ++b) {
      d_x.middleCols(static_cast<Eigen::Index>(b) * spatial_, spatial_).colwise() =
          d_out.col(b) * inv;
    }
    return d_x;
  }

 private:
  int spatial_ = 0;
  MatX<T> output_;
};

// Fused-MBConv at stride 1, in == out channels, so the additive skip always
// applies. expansion == 1: x + silu(bn(conv3(x))); expansion > 1:
// x + bn2(conv1(silu(bn1(conv3_to_expanded(x))))).
template <typename T>
class FusedBlock {
 public:
  FusedBlock(int channels, int expansion, const std::string& name)
      : expansion_(expansion),
        conv_(channels, channels * expansion, 3, name + ".conv"),
        bn_(channels * expansion, name + ".bn") {
    if (expansion > 1) {
      project_ = std::make_unique<Conv2d<T>>(channels * expansion, channels, 1, name + ".project");
      bn2_ = std::make_unique<BatchNorm<T>>(channels, name + ".bn2");
    }
  }

  void init(Rng& rng) {
    conv_.init(rng);
    if (project_) project_->init(rng);
  }

  const MatX<T>& forward(const MatX<T>& x, int l, int batch, bool training,
                         bool update_running) {
    const MatX<T>& a = bn_.forward(conv_.forward(x, l, batch), training, update_running);
    const MatX<T>& act = silu_.forward(a);
    if (expansion_ == 1) {
      output_ = x + act;
    } else {
      output_ = x + bn2_->forward(project_->forward(act, l, batch), training, update_running);
    }
    return output_;
  }

  MatX<T> backward(const MatX<T>& d_out) {
    MatX<T> d_branch;
    if (expansion_ == 1) {
      d_branch = conv_.backward(bn_.backward(silu_.backward(d_out)));
    } else {
      d_branch = conv_.backward(
          bn_.backward(silu_.backward(project_->backward(bn2_->backward(d_out)))));
    }
    return d_out + d_branch;
  }

  void collect_params(std::vector<ParamRef<T>>& out) {
    conv_.collect_params(out);
    bn_.collect_params(out);
    if (project_) {
      project_->collect_params(out);
      bn2_->collect_params(out);
    }
  }

  void collect_state(std::vector<ParamRef<T>>& out) {
    bn_.collect_state(out);
    if (bn2_) bn2_->collect_state(out);
  }

  Conv2d<T>& projection() { return expansion_ == 1 ? conv_ : *project_; }
  BatchNorm<T>& projection_bn() { return expansion_ == 1 ? bn_ : *bn2_; }

 private:
  int expansion_;
  Conv2d<T> conv_;
  BatchNorm<T> bn_;
  SiLU<T> silu_;
  std::unique_ptr<Conv2d<T>> project_;
  std::unique_ptr<BatchNorm<T>> bn2_;
  MatX<T> output_;
};

}  // namespace tglink
