#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <span>
#include <vector>

#include "splatfeat/feature_map.hpp"
#include "splatfeat/rasterizer.hpp"

namespace splatfeat::testing {

/// Reference renderer: every pixel walks every projected Gaussian in depth
/// order with the production kernel's float expressions. No tiles, no
/// culling radius.
template <class T>
struct NaiveRender {
    int width = 0, height = 0;
    std::vector<std::vector<Contribution>> pixels;
    std::vector<float> accumulated;
    FeatureMap<T> features;
};

template <class T>
NaiveRender<T> naive_render(const GaussianScene& scene, const CameraView& view, const RasterConfig& cfg = {});

/// Rendering operator of one or more views as an explicit sparse matrix:
/// row (view offset + pixel), column Gaussian id, value = weight.
Eigen::SparseMatrix<double, Eigen::RowMajor> weight_matrix(std::span<const ContributionMap> maps,
                                                           std::size_t gaussian_count);

/// Un-normalized Eq. 4 lift by dense accumulation: f_i = sum w F / sum w,
/// keeping only the single largest weight per pixel when hard is set.
RowMatrix<double> reference_lift(std::span<const FeatureMap<double>> maps,
                                 std::span<const ContributionMap> contributions, std::size_t gaussian_count,
                                 bool hard);

/// O(|A||B|) symmetric squared Chamfer distance.
double brute_chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b);

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
using Quad = __float128;
double golden_section_min(const std::function<Quad(Quad)>& f, double lo, double hi, double tol = 1e-24);

/// Number of distinct voxels floor(p / size) occupied by the points.
std::size_t occupied_voxels(std::span<const Eigen::Vector3f> points, double size);

/// Optimal 2-means partition by enumeration; returns, per cluster, the
/// point nearest its centroid (ascending).
std::vector<std::size_t> exhaustive_two_means_medoids(std::span<const Eigen::VectorXd> points);

/// Pearson chi-square statistic of counts against a uniform expectation.
double chi_square_uniform(std::span<const std::size_t> counts);

}  // namespace splatfeat::testing
