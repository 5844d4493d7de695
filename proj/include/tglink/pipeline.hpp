#pragma once

#include <cmath>
#include <vector>

#include "tglink/channels.hpp"
#include "tglink/model.hpp"
#include "tglink/sampler.hpp"

namespace tglink {

// Sampling and encoding hyperparameters, resolved to concrete values.
struct SamplingConfig {
  int n_nearest = 12;
  int p_parametric = 0;
  int m_candidates = 48;
  double alpha = 5.0;
  double time_scale = 1.0;

  int sequence_length() const { return n_nearest + p_parametric + 1; }
};

// Query link -> sequence -> channel image -> logits, with the matching
// backward pass. Owns all trainable state (encoder + network).
template <typename T>
class Pipeline {
 public:
  Pipeline(const NetSpec& netspec, const SamplingConfig& sampling, size_t node_count,
           int embed_dim, uint64_t seed)
      : sampling_(sampling), net_(netspec) {
    Rng enc_rng(Rng::derive_seed(seed, 101));
    enc_ = EncoderParams<T>::init(node_count, embed_dim, enc_rng);
    Rng net_rng(Rng::derive_seed(seed, 202));
    net_.init(net_rng);
  }

  LinkSequence build_sequence_for(const TemporalGraph& g, const Link& query) const {
    return sample_sequence(g, query, static_cast<size_t>(sampling_.n_nearest),
                           static_cast<size_t>(sampling_.p_parametric),
                           static_cast<size_t>(sampling_.m_candidates), enc_,
                           sampling_.time_scale);
  }

  // Stacks per-sequence channel images into one (5 x batch*l*l) input.
  MatX<T> encode(const std::vector<LinkSequence>& seqs) const {
    const int l = sampling_.sequence_length();
    const int s = l * l;
    const int batch = static_cast<int>(seqs.size());
    MatX<T> input(kNumChannels, static_cast<Eigen::Index>(batch) * s);
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < batch; ++b) {
      const ChannelImage<T> img = assemble_image(seqs[static_cast<size_t>(b)], enc_,
                                                 static_cast<T>(sampling_.alpha),
                                                 sampling_.time_scale);
      const Eigen::Index base = static_cast<Eigen::Index>(b) * s;
      for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
          const Eigen::Index col = base + i * l + j;
          for (int c = 0; c < kNumChannels; ++c) {
            input(c, col) = img.ch[static_cast<size_t>(c)](i, j);
          }
        }
      }
    }
    return input;
  }

  const MatX<T>& forward(const MatX<T>& input, int batch, bool training,
                         bool update_running = true) {
    return net_.forward(input, sampling_.sequence_length(), batch, training, update_running);
  }

  // Mean 2-class cross entropy; labels are 0 (negative) / 1 (positive).
  static double mean_cross_entropy(const MatX<T>& logits, const std::vector<int>& labels) {
    double total = 0.0;
    for (size_t b = 0; b < labels.size(); ++b) {
      const auto col = logits.col(static_cast<Eigen::Index>(b));
      const T mx = col.maxCoeff();
      const double lse =
          static_cast<double>(mx) +
          std::log(static_cast<double>((col.array() - mx).exp().sum()));
      total += lse - static_cast<double>(col(labels[b]));
    }
    return total / static_cast<double>(labels.size());
  }

  static MatX<T> cross_entropy_backward(const MatX<T>& logits, const std::vector<int>& labels) {
    MatX<T> d(logits.rows(), logits.cols());
    const T inv_n = T(1) / static_cast<T>(labels.size());
    for (size_t b = 0; b < labels.size(); ++b) {
      const auto col = logits.col(static_cast<Eigen::Index>(b));
      const T mx = col.maxCoeff();
      VecX<T> p = (col.array() - mx).exp().matrix();
      p /= p.sum();
      p(labels[b]) -= T(1);
      d.col(static_cast<Eigen::Index>(b)) = p * inv_n;
    }
    return d;
  }

  // Softmax probability of the positive class per sample.
  static std::vector<double> positive_scores(const MatX<T>& logits) {
    std::vector<double> out(static_cast<size_t>(logits.cols()));
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
      const double z0 = static_cast<double>(logits(0, b));
      const double z1 = static_cast<double>(logits(1, b));
      out[static_cast<size_t>(b)] = 1.0 / (1.0 + std::exp(z0 - z1));
    }
    return out;
  }

  void zero_grad() {
    enc_.zero_grad();
    std::vector<ParamRef<T>> refs;
    net_.collect_params(refs);
    for (auto& r : refs) {
      Eigen::Map<VecX<T>>(r.grad, r.size).setZero();
    }
  }

  // Backpropagates logits gradients through the network and the embedding
  // channel into the encoder parameters.
  void backward(const MatX<T>& d_logits, const std::vector<LinkSequence>& seqs) {
    const MatX<T> d_input = net_.backward(d_logits);
    const int l = sampling_.sequence_length();
    const int s = l * l;
    // Serial, in sample order: keeps gradient accumulation deterministic.
    for (size_t b = 0; b < seqs.size(); ++b) {
      MatX<T> d_ch0(l, l);
      const Eigen::Index base = static_cast<Eigen::Index>(b) * s;
      for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
          d_ch0(i, j) = d_input(kChannelEmbed, base + i * l + j);
        }
      }
      // Entries the assembly zeroed are constants; their gradient is dropped.
      mask_channel(seqs[b], d_ch0);
      encoder_backward(enc_, seqs[b], sampling_.time_scale, d_ch0);
    }
  }

  std::vector<ParamRef<T>> trainable_params() {
    std::vector<ParamRef<T>> refs;
    refs.push_back({"encoder.embeddings", enc_.embeddings.data(), enc_.d_embeddings.data(),
                    enc_.embeddings.size()});
    refs.push_back({"encoder.omega", enc_.omega.data(), enc_.d_omega.data(), enc_.omega.size()});
    refs.push_back({"encoder.phase", enc_.phase.data(), enc_.d_phase.data(), enc_.phase.size()});
    net_.collect_params(refs);
    return refs;
  }

  std::vector<ParamRef<T>> state_buffers() {
    std::vector<ParamRef<T>> refs;
    net_.collect_state(refs);
    return refs;
  }

  EncoderParams<T>& encoder() { return enc_; }
  const EncoderParams<T>& encoder() const { return enc_; }
  EffNet<T>& net() { return net_; }
  const SamplingConfig& sampling() const { return sampling_; }

 private:
  SamplingConfig sampling_;
  EncoderParams<T> enc_;
  EffNet<T> net_;
};

}  // namespace tglink
