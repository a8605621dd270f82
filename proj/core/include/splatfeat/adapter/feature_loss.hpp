#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "splatfeat/feature_map.hpp"

namespace splatfeat::adapter {

template <class T>
struct FeatureLoss {
    /// sqrt(mean over (view, pixel) of (1 - cos(prediction, target))^2).
    T value = 0;
    /// dL/d(prediction), one map per view.
    std::vector<FeatureMap<T>> gradient;
    /// Pixels where either vector had zero norm; they count as cos = 0
    /// (term 1) and receive zero gradient.
    std::size_t zero_norm_pixels = 0;
};

/// Cosine alignment loss between refined reference-view features and the
/// original reference features (treated as constants).
template <class T>
FeatureLoss<T> feature_loss(std::span<const FeatureMap<T>> prediction,
                            std::span<const FeatureMap<T>> target);

}  // namespace splatfeat::adapter
