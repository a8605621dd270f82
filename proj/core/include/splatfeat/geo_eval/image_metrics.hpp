#pragma once

#include <cstdint>
#include <vector>

#include "splatfeat/feature_map.hpp"

namespace splatfeat::geo {

/// PSNR reported for a perfect match.
inline constexpr double kPsnrCap = 99.0;

struct ImageQuality {
    double psnr = 0;
    double ssim = 0;
    std::size_t pixels = 0;
};

/// Mean squared error over the masked pixels (all channels).
double masked_mse(const FeatureMap<double>& pred, const FeatureMap<double>& gt,
                  const std::vector<std::uint8_t>& mask);

/// 10 log10(1 / mse), capped at kPsnrCap.
double psnr_from_mse(double mse);

/// Per-pixel SSIM of the luma channels (Rec. 601 for RGB, the channel
/// itself for single-channel maps): 11x11 Gaussian window with sigma 1.5,
/// C1 = 0.01^2, C2 = 0.03^2, window weights renormalized at the border.
FeatureMap<double> ssim_map(const FeatureMap<double>& pred, const FeatureMap<double>& gt);

/// PSNR (peak 1) and mean SSIM over the pixels where mask != 0. An empty
/// mask region throws PreconditionError.
ImageQuality masked_psnr_ssim(const FeatureMap<double>& pred, const FeatureMap<double>& gt,
                              const std::vector<std::uint8_t>& mask);

}  // namespace splatfeat::geo
