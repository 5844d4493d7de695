#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "tglink/encoder.hpp"
#include "tglink/sampler.hpp"

namespace tglink {

// Channel order of the stacked attention image.
enum : int {
  kChannelEmbed = 0,   // dot products of link embeddings
  kChannelTime = 1,    // exp(-alpha * |dt|)
  kChannelSource = 2,  // source-source identity
  kChannelDest = 3,    // destination-destination identity
  kChannelCross = 4,   // source-destination identity
};
constexpr int kNumChannels = 5;

template <typename T>
struct ChannelImage {
  int l = 0;
  std::array<MatX<T>, kNumChannels> ch;
};

// Embeddings for every slot, pad rows zero; row l-1 is the query.
template <typename T>
MatX<T> embed_sequence(const EncoderParams<T>& p, const LinkSequence& seq,
                       double time_scale) {
  const int l = seq.length();
  MatX<T> embeds = MatX<T>::Zero(l, p.dim());
  const double t_query = seq.query().link.timestamp;
  for (int i = 0; i < l; ++i) {
    if (seq.is_pad(i)) continue;
    embeds.row(i) = link_embed(p, seq.slots[static_cast<size_t>(i)].link, t_query, time_scale)
                        .transpose();
  }
  return embeds;
}

// Pairwise dot products between link embeddings (rows of `embeds`).
template <typename T>
MatX<T> transductive_channel(const MatX<T>& embeds) {
  return embeds * embeds.transpose();
}

// exp(-alpha |t_i - t_j|) over scaled timestamps; pad rows and columns zero.
template <typename T>
MatX<T> time_channel(const LinkSequence& seq, T alpha, double time_scale) {
  const int l = seq.length();
  MatX<T> out = MatX<T>::Zero(l, l);
  for (int i = 0; i < l; ++i) {
    if (seq.is_pad(i)) continue;
    const double ti = seq.slots[static_cast<size_t>(i)].link.timestamp;
    for (int j = 0; j < l; ++j) {
      if (seq.is_pad(j)) continue;
      const double tj = seq.slots[static_cast<size_t>(j)].link.timestamp;
      out(i, j) = std::exp(-alpha * static_cast<T>(std::abs(ti - tj) / time_scale));
    }
  }
  return out;
}

// Equality indicator between two id sequences; -1 marks a pad slot and never
// matches anything.
template <typename T>
MatX<T> identity_channel(const std::vector<int64_t>& ids, const std::vector<int64_t>& other) {
  const int l = static_cast<int>(ids.size());
  MatX<T> out = MatX<T>::Zero(l, l);
  for (int i = 0; i < l; ++i) {
    if (ids[static_cast<size_t>(i)] < 0) continue;
    for (int j = 0; j < l; ++j) {
      if (ids[static_cast<size_t>(i)] == other[static_cast<size_t>(j)]) out(i, j) = T(1);
    }
  }
  return out;
}

inline std::vector<int64_t> source_ids(const LinkSequence& seq) {
  std::vector<int64_t> ids(static_cast<size_t>(seq.length()));
  for (int i = 0; i < seq.length(); ++i) {
    ids[static_cast<size_t>(i)] =
        seq.is_pad(i) ? -1 : static_cast<int64_t>(seq.slots[static_cast<size_t>(i)].link.source);
  }
  return ids;
}

inline std::vector<int64_t> destination_ids(const LinkSequence& seq) {
  std::vector<int64_t> ids(static_cast<size_t>(seq.length()));
  for (int i = 0; i < seq.length(); ++i) {
    ids[static_cast<size_t>(i)] = seq.is_pad(i)
                                      ? -1
                                      : static_cast<int64_t>(
                                            seq.slots[static_cast<size_t>(i)].link.destination);
  }
  return ids;
}

// All five attention matrices before any zeroing.
template <typename T>
std::array<MatX<T>, kNumChannels> raw_channels(const LinkSequence& seq,
                                               const EncoderParams<T>& p, T alpha,
                                               double time_scale) {
  std::array<MatX<T>, kNumChannels> ch;
  ch[kChannelEmbed] = transductive_channel(embed_sequence(p, seq, time_scale));
  ch[kChannelTime] = time_channel(seq, alpha, time_scale);
  const auto src = source_ids(seq);
  const auto dst = destination_ids(seq);
  ch[kChannelSource] = identity_channel<T>(src, src);
  ch[kChannelDest] = identity_channel<T>(dst, dst);
  ch[kChannelCross] = identity_channel<T>(src, dst);
  return ch;
}

// Zeroes the strict upper triangle (diagonal kept) and every pad row/column.
template <typename T>
void mask_channel(const LinkSequence& seq, MatX<T>& m) {
  const int l = seq.length();
  for (int i = 0; i < l; ++i) {
    for (int j = i + 1; j < l; ++j) m(i, j) = T(0);
  }
  for (int i = 0; i < l; ++i) {
    if (!seq.is_pad(i)) continue;
    m.row(i).setZero();
    m.col(i).setZero();
  }
}

// The 5 x l x l input image: raw channels, masked.
template <typename T>
ChannelImage<T> assemble_image(const LinkSequence& seq, const EncoderParams<T>& p, T alpha,
                               double time_scale) {
  ChannelImage<T> img;
  img.l = seq.length();
  img.ch = raw_channels(seq, p, alpha, time_scale);
  for (auto& m : img.ch) mask_channel(seq, m);
  return img;
}

// Backpropagates a loss gradient on the masked embedding channel into the
// encoder parameters. `d_masked` must already be zero at masked entries.
template <typename T>
void encoder_backward(EncoderParams<T>& p, const LinkSequence& seq, double time_scale,
                      const MatX<T>& d_masked) {
  const int l = seq.length();
  const MatX<T> embeds = embed_sequence(p, seq, time_scale);
  // channel = E E^T  =>  dE = (G + G^T) E for G the masked gradient.
  const MatX<T> d_embeds = (d_masked + d_masked.transpose()) * embeds;
  const double t_query = seq.query().link.timestamp;
  for (int i = 0; i < l; ++i) {
    if (seq.is_pad(i)) continue;
    const Link& link = seq.slots[static_cast<size_t>(i)].link;
    const auto grad = d_embeds.row(i).transpose();
    p.d_embeddings.row(p.row_of(link.source)) += grad.transpose();
    p.d_embeddings.row(p.row_of(link.destination)) += grad.transpose();
    const T dt = static_cast<T>((t_query - link.timestamp) / time_scale);
    // d cos(w dt + b) / dw = -sin(w dt + b) dt ; /db = -sin(w dt + b)
    const VecX<T> s = ((p.omega.array() * dt) + p.phase.array()).sin().matrix();
    p.d_phase.array() -= s.array() * grad.array();
    p.d_omega.array() -= s.array() * grad.array() * dt;
  }
}

}  // namespace tglink
