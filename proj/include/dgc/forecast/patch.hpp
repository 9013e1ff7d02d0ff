#pragma once

#include "dgc/core/errors.hpp"
#include "dgc/core/types.hpp"

#include <string>

namespace dgc::forecast {

struct PatchConfig {
  Eigen::Index patch_len = 16;
  Eigen::Index stride = 8;
  Eigen::Index d_model = 128;
  Eigen::Index n_heads = 16;
  Eigen::Index n_layers = 3;
  double dropout = 0.2;

  void validate(Eigen::Index lookback) const {
    if (patch_len < 1) throw ConfigError("patch_len must be positive");
    if (stride < 1) throw ConfigError("stride must be at least 1");
    if (n_layers < 1) throw ConfigError("n_layers must be at least 1");
    if (n_heads < 1 || d_model < 1 || d_model % n_heads != 0)
      throw ConfigError("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
                        std::to_string(n_heads) + ")");
    if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0, 1)");
    if (patch_len > lookback)
      throw PatchTooLong("patch_len " + std::to_string(patch_len) + " exceeds look-back " + std::to_string(lookback));
  }
};

/// floor((L - patch_len) / stride) + 1, no end padding.
inline Eigen::Index patch_count(Eigen::Index lookback, Eigen::Index patch_len, Eigen::Index stride) {
  if (patch_len > lookback)
    throw PatchTooLong("patch_len " + std::to_string(patch_len) + " exceeds look-back " + std::to_string(lookback));
  if (stride < 1 || patch_len < 1) throw ConfigError("patch_len and stride must be positive");
  return (lookback - patch_len) / stride + 1;
}

/// Each row of `x` (one channel window) becomes C consecutive rows of
/// patch_len values; patch c covers [c*stride, c*stride + patch_len).
template <typename T>
Mat<T> patchify(const Mat<T>& x, Eigen::Index patch_len, Eigen::Index stride) {
  const Eigen::Index c = patch_count(x.cols(), patch_len, stride);
  Mat<T> out(x.rows() * c, patch_len);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index k = 0; k < c; ++k) out.row(r * c + k) = x.row(r).segment(k * stride, patch_len);
  return out;
}

}  // namespace dgc::forecast
