#pragma once

#include <cstddef>
#include <span>

#include "splatfeat/feature_map.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/scene.hpp"

namespace splatfeat {

/// Soft/hard assignment control for feature lifting.
struct LiftConfig {
    static constexpr int kAll = 0;
    /// Per pixel, only the top_k largest-weight contributors take part.
    /// kAll (or any value >= the per-pixel list length) keeps every one.
    int top_k = kAll;
    /// Unit-normalize each non-zero row of the result.
    bool normalize_output = true;
    int threads = 0;
};

/// Lifts reference-view feature maps onto Gaussians:
///
///   f_i = sum_{(d,p) in I_i} w_i(d,p) F(d,p) / sum_{(d,p) in I_i} w_i(d,p)
///
/// with I_i the (view, pixel) pairs whose (possibly top-k truncated)
/// contributor list contains Gaussian i. Rows for Gaussians with empty I_i
/// are zero; with normalize_output, rows with norm > 1e-12 are unit-norm.
///
/// Throws PreconditionError when a contribution map's resolution differs
/// from its feature map, the list lengths differ, channel counts differ, or
/// top_k is negative; ValidationError when an id is >= gaussian_count.
template <class T>
RowMatrix<T> lift(std::span<const FeatureMap<T>> feature_maps,
                  std::span<const ContributionMap> contributions, std::size_t gaussian_count,
                  const LiftConfig& cfg = {});

/// The scene with the lifted rows attached as its per-Gaussian features.
GaussianScene attach_features(const GaussianScene& scene, const RowMatrix<double>& features);

/// Indices into `list` of the contributors kept under top_k, in the
/// list's front-to-back order. Ties in weight keep the front-most entry.
void select_top_k(std::span<const Contribution> list, int top_k, std::vector<std::size_t>& kept);

}  // namespace splatfeat
