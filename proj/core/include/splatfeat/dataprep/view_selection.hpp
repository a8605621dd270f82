#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "splatfeat/camera.hpp"
#include "splatfeat/dataprep/frustum.hpp"
#include "splatfeat/feature_map.hpp"

namespace splatfeat::prep {

/// sqrt(||t||^2 + 2 (1 - tr(R) / 3)) for a relative pose (R, t). The
/// rotation term is evaluated as ||I - R||_F^2 / 3, which cannot go negative.
double pose_distance(const Eigen::Matrix3d& relative_rotation, const Eigen::Vector3d& relative_translation);
/// Distance between two world-to-camera transforms via
/// R_ij = R_j R_i^T, t_ij = t_j - R_ij t_i, evaluated as
/// sqrt(||C_i - C_j||^2 + ||R_i - R_j||_F^2 / 3) so equal poses give exactly 0.
double pose_distance(const Eigen::Matrix4d& pose_i, const Eigen::Matrix4d& pose_j);

struct PoseGraph {
    RowMatrix<double> distance;  // symmetric, zero diagonal
    double delta = 0;            // edges are d(i, j) < delta, i != j
    std::vector<std::vector<std::size_t>> neighbors;

    std::size_t size() const { return neighbors.size(); }
    std::size_t degree(std::size_t i) const { return neighbors[i].size(); }
};

/// delta is the smallest double above max_i (N_g-th smallest d(i, j), j != i),
/// so every node keeps at least N_g neighbours. Throws PreconditionError
/// with fewer than N_g + 1 poses or N_g < 1.
PoseGraph build_graph(std::span<const Eigen::Matrix4d> poses, int n_g, int threads = 0);

/// V distinct nodes drawn without replacement with probability
/// proportional to degree. Throws PreconditionError when V exceeds the
/// number of nodes with positive degree.
std::vector<std::size_t> sample_anchors(const PoseGraph& graph, int v, std::uint64_t seed);

struct Frame {
    std::size_t id = 0;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Vector3d forward = Eigen::Vector3d::UnitZ();
};

std::vector<Frame> frames_from_cameras(std::span<const CameraView> cameras);

/// k-means (k-means++ seeding, at most 100 Lloyd iterations) on
/// [center | forward], then for each centroid the nearest not yet chosen
/// frame (lowest id on ties). Frames are processed in id order, so the
/// result does not depend on input order. Returns ids ascending.
std::vector<std::size_t> select_inputs(std::span<const Frame> frames, int p, std::uint64_t seed);

/// Maps a frame id to a unit embedding vector.
using EmbeddingHook = std::function<Eigen::VectorXd(std::size_t)>;

/// Unit vector of the mean luma over a grid x grid partition of the image,
/// centered by its mean. A stand-in for a learned image embedding.
Eigen::VectorXd luma_embedding(const FeatureMap<double>& image, int grid = 8);

/// Scores each candidate by its minimum cosine distance 1 - <e_c, e_r>
/// over the references; the llround(easy_fraction * n) lowest scores
/// (ties by id) are easy, the rest hard. Both lists are in score order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_targets(
    std::span<const std::size_t> candidates, std::span<const std::size_t> references,
    const EmbeddingHook& embed, double easy_fraction = 0.60);

struct ViewGroupConfig {
    int group_size = 21;     // N_group: neighbours per node and views per group
    int anchors = 3;         // V = K independent groups
    int inputs = 3;          // P, one of {1, 3, 6, 9, 12}
    double iou_threshold = 0.4;
    double easy_fraction = 0.60;
    /// Hard targets sampled; negative matches the easy-target count.
    int hard_count = -1;
    FrustumConfig frustum{DepthRange{}, 20000, 0};
    std::uint64_t seed = 0;
};

struct ViewGroup {
    std::size_t anchor = 0;
    std::vector<std::size_t> neighborhood;  // anchor plus its graph neighbours
    std::vector<std::size_t> inputs;
    std::vector<std::size_t> easy;
    std::vector<std::size_t> hard;
};

/// Input-view counts used for training clips.
inline constexpr int kInputCounts[] = {1, 3, 6, 9, 12};

/// Rescales camera translations so the centers' largest distance from
/// their mean is 1 (no-op for coincident centers).
std::vector<CameraView> normalize_translations(std::span<const CameraView> cameras);

/// Full selection: pose graph, anchors, inputs, easy/hard targets and the
/// frustum filter (a target stays when its IoU with some input is >= tau).
/// Translations are normalized first.
std::vector<ViewGroup> build_view_groups(std::span<const CameraView> cameras, const ViewGroupConfig& cfg,
                                         const EmbeddingHook& embed);

}  // namespace splatfeat::prep
