#pragma once

// Three-layer graph convolution over the channel graph. Node features are
// the raw windows; the two hidden layers are blended with the autoencoder's
// latent layers before propagating further.

#include "dgc/autodiff/ops.hpp"
#include "dgc/cluster/rfl.hpp"
#include "dgc/nn/init.hpp"

#include <random>
#include <string>
#include <vector>

namespace dgc::cluster {

inline constexpr double kDefaultFusion = 0.5;

template <typename T>
class Gcl {
 public:
  Gcl(ad::ParameterSet<T>& ps, const LatentDims& dims, Eigen::Index n_clusters, std::mt19937_64& rng,
      double epsilon = kDefaultFusion)
      : n_(n_clusters), epsilon_(epsilon) {
    if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("fusion coefficient must lie in [0, 1]");
    require_shape(n_clusters >= 1, "gcl: need at least one cluster");
    w0_ = &ps.add("gcl.w0", nn::xavier<T>(dims.lookback, dims.l1, rng));
    w1_ = &ps.add("gcl.w1", nn::xavier<T>(dims.l1, dims.l2, rng));
    w2_ = &ps.add("gcl.w2", nn::xavier<T>(dims.l2, n_clusters, rng));
  }

  Eigen::Index clusters() const { return n_; }
  double epsilon() const { return epsilon_; }

  /// x: (B*N) x L windows, prop: N x N propagation operator applied to each
  /// window's block of N rows. Returns G_final, rows summing to one.
  ad::Var<T> forward(ad::Tape<T>& t, const ad::Var<T>& x, const Mat<T>& prop, const Latents<T>& z) const {
    const T e = static_cast<T>(epsilon_);
    auto g1 = ad::relu(ad::group_left_multiply(ad::matmul(x, t.param(*w0_)), prop));
    auto f1 = ad::mix(g1, z.h1, T(1) - e, e);
    auto g2 = ad::relu(ad::group_left_multiply(ad::matmul(f1, t.param(*w1_)), prop));
    auto f2 = ad::mix(g2, z.h2, T(1) - e, e);
    return ad::softmax_rows(ad::group_left_multiply(ad::matmul(f2, t.param(*w2_)), prop));
  }

  std::vector<ad::Parameter<T>*> parameters() const { return {w0_, w1_, w2_}; }

 private:
  Eigen::Index n_;
  double epsilon_;
  ad::Parameter<T>*w0_, *w1_, *w2_;
};

}  // namespace dgc::cluster
