#pragma once

#include <cstdint>
#include <vector>

#include "splatfeat/camera.hpp"
#include "splatfeat/feature_map.hpp"
#include "splatfeat/rng.hpp"
#include "splatfeat/scene.hpp"

namespace splatfeat {

struct SynthConfig {
    int gaussians = 8;
    int views = 3;
    int channels = 8;
    int width = 64;
    int height = 64;
    double min_scale = 0.03;
    double max_scale = 0.12;
    /// Camera ring radius around the cube center.
    double ring_radius = 2.5;
    std::uint64_t seed = 0;
};

/// Scene with unit-norm ground-truth features, its cameras and the
/// features rendered into every view.
struct SynthScene {
    GaussianScene scene;
    std::vector<CameraView> cameras;
    std::vector<FeatureMap<double>> feature_maps;
};

/// Random Gaussians in the unit cube and cameras on a ring looking inward.
SynthScene make_synthetic(const SynthConfig& cfg);

/// One camera facing a grid of small, fully opaque Gaussians whose screen
/// footprints do not overlap, so every covered pixel has exactly one
/// contributor. Grid cells are `cell` pixels wide.
SynthScene make_isolated(int width, int height, int cell, int channels, std::uint64_t seed);

/// `count` small Gaussians uniform in the unit cube, with unit features;
/// the workload of the bench command.
GaussianScene make_bench_scene(std::size_t count, int channels, std::uint64_t seed);

/// Random Gaussian with the given center, scale range and opacity range.
Gaussian random_gaussian(Rng& rng, const Eigen::Vector3f& center, double min_scale,
                         double max_scale, double min_opacity = 0.3, double max_opacity = 1.0);

/// Row-wise unit vectors with standard normal entries.
RowMatrix<double> random_unit_rows(Rng& rng, std::size_t rows, int cols);

/// `count` cameras on a horizontal ring looking at `target`.
std::vector<CameraView> ring_cameras(int count, int width, int height, double radius,
                                     const Eigen::Vector3d& target, double elevation = 0.4);

}  // namespace splatfeat
