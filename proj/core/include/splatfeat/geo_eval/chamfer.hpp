#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace splatfeat::geo {

/// Static 3-D k-d tree for exact nearest-neighbour queries.
class KdTree {
public:
    explicit KdTree(std::span<const Eigen::Vector3d> points);

    struct Hit {
        std::size_t index;
        double squared_distance;
    };
    /// Nearest stored point. The distance is computed as
    /// dx*dx + dy*dy + dz*dz, identical to a brute-force scan.
    Hit nearest(const Eigen::Vector3d& query) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t point;  // index into order_
        int axis;
        std::int32_t left = -1, right = -1;
    };
    std::int32_t build(std::size_t begin, std::size_t end, int depth);
    void search(std::int32_t node, const Eigen::Vector3d& q, Hit& best) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

/// (1/|from|) sum_a min_b ||a - b||^2, summed in `from` order.
double mean_nearest_squared(std::span<const Eigen::Vector3d> from, std::span<const Eigen::Vector3d> to,
                            int threads = 0);

/// Symmetric squared Chamfer distance. Throws PreconditionError on an empty set.
double chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b, int threads = 0);

}  // namespace splatfeat::geo
