#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "tglink/graph.hpp"
#include "tglink/rng.hpp"

namespace tglink {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Trainable encoder state: node embedding table plus the cosine time
// encoding. The embedding table has node_count+1 rows; the extra row serves
// ids that were never seen in training.
template <typename T>
struct EncoderParams {
  MatX<T> embeddings;  // (node_count+1) x dim
  VecX<T> omega;       // time encoding frequencies
  VecX<T> phase;       // time encoding phases

  MatX<T> d_embeddings;
  VecX<T> d_omega;
  VecX<T> d_phase;

  int dim() const { return static_cast<int>(omega.size()); }
  size_t node_count() const { return static_cast<size_t>(embeddings.rows()) - 1; }

  Eigen::Index row_of(NodeId id) const {
    const Eigen::Index n = embeddings.rows() - 1;
    return (id >= 0 && static_cast<Eigen::Index>(id) < n) ? static_cast<Eigen::Index>(id) : n;
  }

  void zero_grad() {
    d_embeddings.setZero(embeddings.rows(), embeddings.cols());
    d_omega.setZero(omega.size());
    d_phase.setZero(phase.size());
  }

  static EncoderParams init(size_t node_count, int dim, Rng& rng) {
    EncoderParams p;
    p.embeddings.resize(static_cast<Eigen::Index>(node_count) + 1, dim);
    const T std = T(1) / std::sqrt(static_cast<T>(dim));
    for (Eigen::Index i = 0; i < p.embeddings.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.embeddings.cols(); ++j) {
        p.embeddings(i, j) = static_cast<T>(rng.gaussian()) * std;
      }
    }
    // Frequencies from a log-spaced grid of periods (in scaled time units),
    // phases zero. Covers interactions from a hundredth of a mean gap up to
    // a hundred of them.
    p.omega.resize(dim);
    p.phase = VecX<T>::Zero(dim);
    for (int j = 0; j < dim; ++j) {
      const double frac = dim > 1 ? static_cast<double>(j) / (dim - 1) : 0.5;
      const double period = std::pow(10.0, -2.0 + 4.0 * frac);
      p.omega(j) = static_cast<T>(2.0 * M_PI / period);
    }
    p.zero_grad();
    return p;
  }
};

// phi(dt)[i] = cos(omega_i * dt + phase_i), dt already scaled.
template <typename T>
VecX<T> time_encode(const EncoderParams<T>& p, T dt) {
  return ((p.omega.array() * dt) + p.phase.array()).cos().matrix();
}

// Link representation: phi((t_query - t_link)/time_scale) + H(source) +
// H(destination). For the query link itself the time argument is zero.
template <typename T>
VecX<T> link_embed(const EncoderParams<T>& p, const Link& link, double t_query,
                   double time_scale) {
  const T dt = static_cast<T>((t_query - link.timestamp) / time_scale);
  VecX<T> v = time_encode(p, dt);
  v += p.embeddings.row(p.row_of(link.source)).transpose();
  v += p.embeddings.row(p.row_of(link.destination)).transpose();
  return v;
}

// Dot-product closeness between two link embeddings.
template <typename T>
T closeness(const VecX<T>& query_embed, const VecX<T>& history_embed) {
  if (query_embed.size() != history_embed.size()) {
    throw std::invalid_argument("closeness: dimension mismatch");
  }
  return query_embed.dot(history_embed);
}

}  // namespace tglink
