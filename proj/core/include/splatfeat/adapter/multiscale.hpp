#pragma once

#include <span>
#include <vector>

#include "splatfeat/adapter/params.hpp"
#include "splatfeat/feature_map.hpp"

namespace splatfeat::adapter {

enum class MergeMode {
    kResidual,  // acc += y_l
    kAverage,   // running mean over levels
};

struct MultiScaleConfig {
    int target_height = 0;
    int target_width = 0;
    MergeMode merge = MergeMode::kResidual;
};

/// Bilinear resize with half-pixel centers and edge clamping. Same-size
/// resizes copy; constant maps stay exactly constant.
template <class T>
FeatureMap<T> resize_bilinear(const FeatureMap<T>& input, int height, int width);

/// Projects each level with params.level_in[l] (C_l -> C), resizes it to
/// the target grid and merges coarse to fine. Levels must be ordered
/// coarse to fine and differ from the target by power-of-two factors.
template <class T>
FeatureMap<T> multiscale_aggregate(std::span<const FeatureMap<T>> levels,
                                   const FusionParams<T>& params, const MultiScaleConfig& cfg);

/// Resizes `fused` back to every level's grid and projects with
/// params.level_out[l] (C -> C_l). The results are meant to be added to
/// the encoder features as skip connections.
template <class T>
std::vector<FeatureMap<T>> multiscale_scatter(const FeatureMap<T>& fused,
                                              std::span<const FeatureMap<T>> levels,
                                              const FusionParams<T>& params);

}  // namespace splatfeat::adapter
