#pragma once

// Everything a run trains, assembled from a ModelConfig and the ablation.

#include "dgc/cluster/gcl.hpp"
#include "dgc/cluster/graph.hpp"
#include "dgc/cluster/rfl.hpp"
#include "dgc/forecast/forecaster.hpp"
#include "dgc/train/config.hpp"
#include "dgc/train/objective.hpp"

#include <memory>
#include <random>
#include <vector>

namespace dgc::train {

inline bool uses_clustering(Ablation a) { return a != Ablation::CiOnly; }
inline bool uses_rfl(Ablation a) { return a != Ablation::NoRfl && a != Ablation::CiOnly; }
inline bool uses_gcl(Ablation a) { return a != Ablation::NoGcl && a != Ablation::CiOnly; }

template <typename T>
class Model {
 public:
  Model(const ModelConfig& cfg, Ablation ablation, Eigen::Index channels, const MatD& adjacency, std::mt19937_64& rng)
      : cfg_(cfg), ablation_(ablation), channels_(channels), adjacency_(adjacency) {
    cfg.validate();
    require_shape(adjacency.rows() == channels && adjacency.cols() == channels, "model: adjacency must be N x N");
    forecast::ForecasterDims fd{channels, cfg.lookback, cfg.horizon, cfg.patch, cfg.instance_norm};
    forecaster_ = std::make_unique<forecast::Forecaster<T>>(params_, fd, rng);
    const cluster::LatentDims ld{cfg.lookback, cfg.l1, cfg.l2};
    if (uses_rfl(ablation)) rfl_ = std::make_unique<cluster::Rfl<T>>(params_, ld, rng);
    else if (uses_clustering(ablation)) linear_ = std::make_unique<cluster::LinearLatent<T>>(params_, ld, rng);
    propagation_ = cast<T>(cluster::propagation_operator(adjacency));
  }

  /// Adds the graph network and cluster centres once n is known.
  void attach_clustering(const MatD& centers, std::mt19937_64& rng) {
    require_shape(uses_gcl(ablation_), "model: this variant has no graph stage");
    require_shape(!gcl_, "model: clustering already attached");
    require_shape(centers.cols() == cfg_.l2, "model: centre width must equal l2");
    const cluster::LatentDims ld{cfg_.lookback, cfg_.l1, cfg_.l2};
    gcl_ = std::make_unique<cluster::Gcl<T>>(params_, ld, centers.rows(), rng, cfg_.epsilon);
    centers_ = &params_.add("mu", cast<T>(centers));
  }

  ClusterNet<T> net() const {
    ClusterNet<T> n;
    n.rfl = rfl_.get();
    n.linear = linear_.get();
    n.gcl = gcl_.get();
    n.centers = centers_;
    n.propagation = propagation_;
    n.channels = channels_;
    return n;
  }

  /// Latent H2 codes of a (B*N) x L batch without recording gradients.
  MatD latent_codes(const MatD& x) const {
    ad::Tape<T> t;
    auto xv = t.constant(cast<T>(x));
    const auto z = rfl_ ? rfl_->encode(t, xv) : linear_->encode(t, xv);
    return cast<double>(z.h2.value());
  }

  ad::ParameterSet<T>& params() { return params_; }
  const ad::ParameterSet<T>& params() const { return params_; }
  std::vector<ad::Parameter<T>*> all_parameters() {
    std::vector<ad::Parameter<T>*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  const forecast::Forecaster<T>& forecaster() const { return *forecaster_; }
  const cluster::Rfl<T>* rfl() const { return rfl_.get(); }
  const cluster::Gcl<T>* gcl() const { return gcl_.get(); }
  Eigen::Index channels() const { return channels_; }
  Eigen::Index clusters() const { return gcl_ ? gcl_->clusters() : 0; }
  const ModelConfig& config() const { return cfg_; }
  Ablation ablation() const { return ablation_; }
  const MatD& adjacency() const { return adjacency_; }

 private:
  ModelConfig cfg_;
  Ablation ablation_;
  Eigen::Index channels_;
  MatD adjacency_;
  Mat<T> propagation_;
  ad::ParameterSet<T> params_;
  std::unique_ptr<forecast::Forecaster<T>> forecaster_;
  std::unique_ptr<cluster::Rfl<T>> rfl_;
  std::unique_ptr<cluster::LinearLatent<T>> linear_;
  std::unique_ptr<cluster::Gcl<T>> gcl_;
  ad::Parameter<T>* centers_ = nullptr;
};

}  // namespace dgc::train
