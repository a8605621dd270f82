#pragma once

#include <vector>

#include "splatfeat/feature_map.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/scene.hpp"

namespace splatfeat::adapter {

struct PEConfig {
    double omega0 = 10000.0;
};

/// Frequencies omega_k = omega0^(-2k / D') for k in [0, D'/2), D' = C / 4.
/// Throws PreconditionError unless C is divisible by 4 with D' even.
std::vector<double> pe_frequencies(int channels, const PEConfig& cfg = {});

/// gamma(v) = [sin(w_0 v), cos(w_0 v), sin(w_1 v), cos(w_1 v), ...] (length D').
template <class T>
void sinusoid_encode(T value, const std::vector<double>& freqs, T* out);

/// G' = G + [gamma(x~) | gamma(y~) | gamma(z~) | gamma(w*)] per pixel, where
/// (x~, y~, z~) is the dominant Gaussian's center normalized to [0,1]^3 by
/// the scene bounding box and w* its rendering weight. Pixels without a
/// dominant Gaussian encode (0, 0, 0, 0). Degenerate bbox axes map to 0.
template <class T>
FeatureMap<T> gs_pe(const FeatureMap<T>& rendered, const DominantMap& dominant,
                    const GaussianScene& scene, const PEConfig& cfg = {});

}  // namespace splatfeat::adapter
