#pragma once

#include <cstdint>
#include <vector>

#include "splatfeat/adapter/params.hpp"
#include "splatfeat/adapter/positional_encoding.hpp"
#include "splatfeat/camera.hpp"
#include "splatfeat/feature_map.hpp"
#include "splatfeat/scene.hpp"

namespace splatfeat::adapter {

/// Desk-scale stand-in for one training clip: reference views with clean
/// features, target views with degraded features plus their ground truth.
struct ToyTask {
    GaussianScene scene;
    std::vector<CameraView> reference_views;
    std::vector<CameraView> target_views;
    std::vector<FeatureMap<double>> reference_features;
    std::vector<FeatureMap<double>> target_features;
    std::vector<FeatureMap<double>> target_truth;
};

/// The shipped task: 3 large Gaussians, one reference and one target view,
/// C = 8 on an 8x8 grid. Target features are an attenuated, offset copy of
/// the ground truth.
ToyTask make_toy_task(std::uint64_t seed);

/// Rendered, position-encoded geometry features G' for every view. These
/// do not depend on the learnable parameters.
struct ToyInputs {
    std::vector<FeatureMap<double>> reference;
    std::vector<FeatureMap<double>> target;
};
ToyInputs prepare_toy_inputs(const ToyTask& task, const PEConfig& pe = {});

struct ToyObjective {
    double total = 0;
    double surrogate = 0;  // MSE(F^_tar, F_gt)
    double feature = 0;    // L_feat on the reference views
};

/// total = surrogate + feature_weight * feature. The pipeline per view is
/// refine -> project -> adaptive_fuse (targets) and refine -> feature_loss
/// (references). Accumulates dTotal/dparams into `grad` when non-null.
ToyObjective toy_objective(const ToyTask& task, const ToyInputs& inputs,
                           const FusionParams<double>& params, double feature_weight,
                           FusionParams<double>* grad);

struct TrainConfig {
    int steps = 200;
    double learning_rate = 1.0;
    double feature_weight = 0.05;
};

struct TrainResult {
    FusionParams<double> params;
    /// Objective before every step plus the final value (steps + 1 entries).
    std::vector<ToyObjective> curve;
};

/// Plain gradient descent. Throws Error naming the step when the objective
/// or the parameters become non-finite.
TrainResult toy_train(const ToyTask& task, FusionParams<double> params, const TrainConfig& cfg);

}  // namespace splatfeat::adapter
