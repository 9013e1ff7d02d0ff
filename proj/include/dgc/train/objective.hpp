#pragma once

#include "dgc/autodiff/ops.hpp"
#include "dgc/cluster/dec.hpp"
#include "dgc/cluster/gcl.hpp"
#include "dgc/cluster/rfl.hpp"

#include <vector>

namespace dgc::train {

struct LossWeights {
  double lambda1 = 0.1;  // clustering (KL) term
  double lambda2 = 1.0;  // reconstruction term
};

/// lambda1 * L_DS + lambda2 * L_REC + L_PRED
inline double total_loss(double rec, double ds, double pred, const LossWeights& w = {}) {
  return w.lambda1 * ds + w.lambda2 * rec + pred;
}

/// Non-owning view of whichever clustering components a run uses.
template <typename T>
struct ClusterNet {
  const cluster::Rfl<T>* rfl = nullptr;              // autoencoder, or
  const cluster::LinearLatent<T>* linear = nullptr;  // its ablation stand-in
  const cluster::Gcl<T>* gcl = nullptr;              // absent when the graph stage is ablated
  ad::Parameter<T>* centers = nullptr;               // n x l2, required with gcl
  Mat<T> propagation;                                // N x N
  Eigen::Index channels = 0;
  T dof = T(1);
};

template <typename T>
struct ClusterTerms {
  cluster::Latents<T> latents;
  ad::Var<T> rec;  // invalid when nothing is reconstructed
  ad::Var<T> ds;   // invalid without the graph stage
  ad::Var<T> q, p, g;
};

/// Clustering losses of a (B*N) x L batch, each averaged over the B windows:
/// L_REC = |X~ - X|^2 / 2N and L_DS = KL(P || G_final) per window.
template <typename T>
ClusterTerms<T> cluster_terms(ad::Tape<T>& t, const ad::Var<T>& x, const ClusterNet<T>& net) {
  const Eigen::Index n = net.channels;
  require_shape(n > 0 && x.rows() % n == 0, "cluster_terms: rows not a multiple of channels");
  const T windows = static_cast<T>(x.rows() / n);
  ClusterTerms<T> out;
  if (net.rfl) {
    out.latents = net.rfl->encode(t, x);
    out.rec = ad::scaled_sq_error(net.rfl->decode(t, out.latents.h2), x, T(1) / (T(2) * static_cast<T>(n) * windows));
  } else {
    require_shape(net.linear != nullptr, "cluster_terms: no latent encoder");
    out.latents = net.linear->encode(t, x);
  }
  if (net.gcl) {
    require_shape(net.centers != nullptr, "cluster_terms: graph stage needs centres");
    out.q = cluster::soft_assignment(out.latents.h2, t.param(*net.centers), net.dof);
    out.p = cluster::target_distribution(out.q, n);
    out.g = net.gcl->forward(t, x, net.propagation, out.latents);
    out.ds = cluster::kl_divergence(out.p, out.g, T(1) / windows);
  }
  return out;
}

/// Differentiable total; missing terms are skipped.
template <typename T>
ad::Var<T> total_loss(const ClusterTerms<T>& c, const ad::Var<T>& pred, const LossWeights& w) {
  std::vector<ad::Var<T>> terms{pred};
  std::vector<T> weights{T(1)};
  if (c.ds.valid()) {
    terms.push_back(c.ds);
    weights.push_back(static_cast<T>(w.lambda1));
  }
  if (c.rec.valid()) {
    terms.push_back(c.rec);
    weights.push_back(static_cast<T>(w.lambda2));
  }
  return ad::weighted_sum(terms, weights);
}

}  // namespace dgc::train
