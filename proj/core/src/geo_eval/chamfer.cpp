#include "splatfeat/geo_eval/chamfer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "splatfeat/error.hpp"
#include "splatfeat/parallel.hpp"

namespace splatfeat::geo {

KdTree::KdTree(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(points_.size());
    root_ = build(0, points_.size(), 0);
}

std::int32_t KdTree::build(std::size_t begin, std::size_t end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % 3;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({order_[mid], axis});
    const std::int32_t left = build(begin, mid, depth + 1);
    const std::int32_t right = build(mid + 1, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(std::int32_t node, const Eigen::Vector3d& q, Hit& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const Eigen::Vector3d& p = points_[n.point];
    const double d = squared_distance(q, p);
    if (d < best.squared_distance || (d == best.squared_distance && n.point < best.index))
        best = {n.point, d};
    const double diff = q[n.axis] - p[n.axis];
    search(diff < 0 ? n.left : n.right, q, best);
    // Points across the plane are at least diff^2 away, and the rounded
    // distance is monotone in each coordinate gap, so this never skips a
    // strictly closer point. Equal distances are still visited for the
    // lowest-index tie rule.
    if (diff * diff <= best.squared_distance) search(diff < 0 ? n.right : n.left, q, best);
}

KdTree::Hit KdTree::nearest(const Eigen::Vector3d& query) const {
    if (points_.empty()) throw PreconditionError("KdTree::nearest: empty tree");
    Hit best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    search(root_, query, best);
    return best;
}

double mean_nearest_squared(std::span<const Eigen::Vector3d> from, std::span<const Eigen::Vector3d> to,
                            int threads) {
    if (from.empty() || to.empty()) throw PreconditionError("chamfer: empty point set");
    const KdTree tree(to);
    std::vector<double> mins(from.size());
    parallel_for(from.size(), resolve_threads(threads), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) mins[i] = tree.nearest(from[i]).squared_distance;
    });
    double sum = 0;
    for (double m : mins) sum += m;
    return sum / static_cast<double>(from.size());
}

double chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b, int threads) {
    return mean_nearest_squared(a, b, threads) + mean_nearest_squared(b, a, threads);
}

}  // namespace splatfeat::geo
