#include "splatfeat/dataprep/view_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "splatfeat/error.hpp"
#include "splatfeat/parallel.hpp"
#include "splatfeat/rng.hpp"

namespace splatfeat::prep {

double pose_distance(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
    // 2 (1 - tr(R) / 3) = |I - R|_F^2 / 3 for a rotation, without cancellation
    return std::sqrt(t.squaredNorm() + (Eigen::Matrix3d::Identity() - r).squaredNorm() / 3.0);
}

double pose_distance(const Eigen::Matrix4d& pi, const Eigen::Matrix4d& pj) {
    const Eigen::Matrix3d ri = pi.topLeftCorner<3, 3>(), rj = pj.topLeftCorner<3, 3>();
    // |t_ij| = |R_j (C_i - C_j)| = |C_i - C_j| and |I - R_j R_i^T|_F = |R_i - R_j|_F,
    // so coincident poses give exactly zero
    const Eigen::Vector3d ci = -ri.transpose() * pi.topRightCorner<3, 1>();
    const Eigen::Vector3d cj = -rj.transpose() * pj.topRightCorner<3, 1>();
    return std::sqrt((ci - cj).squaredNorm() + (ri - rj).squaredNorm() / 3.0);
}

PoseGraph build_graph(std::span<const Eigen::Matrix4d> poses, int n_g, int threads) {
    const std::size_t n = poses.size();
    if (n_g < 1) throw PreconditionError("build_graph: N_g must be at least 1");
    if (n < static_cast<std::size_t>(n_g) + 1)
        throw PreconditionError("build_graph: " + std::to_string(n) + " frames cannot give every node " +
                                std::to_string(n_g) + " neighbours");
    PoseGraph g;
    g.distance = RowMatrix<double>::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for(n, resolve_threads(threads), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                // same (min, max) orientation for both entries keeps d symmetric
                const double d = pose_distance(poses[i], poses[j]);
                g.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            g.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                g.distance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));

    double kth_max = 0;
    std::vector<double> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row.push_back(g.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        std::nth_element(row.begin(), row.begin() + (n_g - 1), row.end());
        kth_max = std::max(kth_max, row[static_cast<std::size_t>(n_g - 1)]);
    }
    g.delta = std::nextafter(kth_max, std::numeric_limits<double>::infinity());
    g.neighbors.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && g.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) < g.delta)
                g.neighbors[i].push_back(j);
    return g;
}

std::vector<std::size_t> sample_anchors(const PoseGraph& graph, int v, std::uint64_t seed) {
    if (v < 0) throw PreconditionError("sample_anchors: negative anchor count");
    std::vector<double> w(graph.size());
    std::size_t positive = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = static_cast<double>(graph.degree(i));
        if (w[i] > 0) ++positive;
    }
    if (static_cast<std::size_t>(v) > positive)
        throw PreconditionError("sample_anchors: " + std::to_string(v) + " anchors requested but only " +
                                std::to_string(positive) + " nodes have neighbours");
    Rng rng(seed);
    std::vector<std::size_t> out;
    for (int k = 0; k < v; ++k) {
        double total = 0;
        for (double x : w) total += x;
        const double target = uniform01(rng) * total;
        double acc = 0;
        std::size_t pick = w.size();
        std::size_t last_positive = w.size();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] <= 0) continue;
            last_positive = i;
            acc += w[i];
            if (target < acc) {
                pick = i;
                break;
            }
        }
        if (pick == w.size()) pick = last_positive;  // rounding at the top end
        out.push_back(pick);
        w[pick] = 0;
    }
    return out;
}

std::vector<Frame> frames_from_cameras(std::span<const CameraView> cameras) {
    std::vector<Frame> f;
    for (std::size_t i = 0; i < cameras.size(); ++i) f.push_back({i, cameras[i].center(), cameras[i].forward()});
    return f;
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 embed6(const Frame& f) {
    Vec6 e;
    e << f.center, f.forward;
    return e;
}

std::size_t nearest_centroid(const Vec6& x, const std::vector<Vec6>& centroids) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = (x - centroids[c]).squaredNorm();
        if (d < bd) {
            bd = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

std::vector<std::size_t> select_inputs(std::span<const Frame> frames, int p, std::uint64_t seed) {
    if (p < 1) throw PreconditionError("select_inputs: P must be at least 1");
    if (frames.size() < static_cast<std::size_t>(p))
        throw PreconditionError("select_inputs: neighbourhood of " + std::to_string(frames.size()) +
                                " frames is smaller than P = " + std::to_string(p));
    std::vector<Frame> sorted(frames.begin(), frames.end());
    std::sort(sorted.begin(), sorted.end(), [](const Frame& a, const Frame& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].id == sorted[i - 1].id) throw PreconditionError("select_inputs: duplicate frame id");
    const std::size_t n = sorted.size();
    std::vector<Vec6> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = embed6(sorted[i]);

    Rng rng(seed);
    std::vector<Vec6> centroids;
    std::vector<bool> chosen(n, false);
    const std::size_t first = uniform_index(rng, n);
    centroids.push_back(x[first]);
    chosen[first] = true;
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(p)) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = chosen[i] ? 0.0 : (x[i] - centroids[nearest_centroid(x[i], centroids)]).squaredNorm();
            total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0) {
            const double target = uniform01(rng) * total;
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0) continue;
                acc += d2[i];
                pick = i;
                if (target < acc) break;
            }
        } else {
            // every remaining frame coincides with a centroid
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) free.push_back(i);
            pick = free[uniform_index(rng, free.size())];
        }
        centroids.push_back(x[pick]);
        chosen[pick] = true;
    }

    std::vector<std::size_t> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_centroid(x[i], centroids);
            changed = changed || c != assign[i];
            assign[i] = c;
        }
        if (!changed) break;
        std::vector<Vec6> sum(centroids.size(), Vec6::Zero());
        std::vector<std::size_t> count(centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i]] += x[i];
            ++count[assign[i]];
        }
        for (std::size_t c = 0; c < centroids.size(); ++c)
            if (count[c] > 0) centroids[c] = sum[c] / static_cast<double>(count[c]);
    }

    std::vector<bool> taken(n, false);
    std::vector<std::size_t> ids;
    for (const Vec6& c : centroids) {
        std::size_t best = n;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double d = (x[i] - c).squaredNorm();
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        taken[best] = true;
        ids.push_back(sorted[best].id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

Eigen::VectorXd luma_embedding(const FeatureMap<double>& image, int grid) {
    if (grid < 1 || image.height < grid || image.width < grid)
        throw PreconditionError("luma_embedding: image smaller than the grid");
    if (image.channels != 3 && image.channels != 1)
        throw PreconditionError("luma_embedding: expected 1 or 3 channels");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(grid * grid);
    Eigen::VectorXd cnt = Eigen::VectorXd::Zero(grid * grid);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const int cell = (y * grid / image.height) * grid + x * grid / image.width;
            const auto px = image.pixel(static_cast<std::size_t>(y) * image.width + x);
            e[cell] += image.channels == 3 ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2] : px[0];
            cnt[cell] += 1;
        }
    e = e.cwiseQuotient(cnt);
    e.array() -= e.mean();
    const double n = e.norm();
    if (n > 0) return e / n;
    e.setZero();
    e[0] = 1.0;
    return e;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_targets(
    std::span<const std::size_t> candidates, std::span<const std::size_t> references,
    const EmbeddingHook& embed, double easy_fraction) {
    if (!(easy_fraction >= 0.0 && easy_fraction <= 1.0))
        throw PreconditionError("partition_targets: easy fraction must lie in [0, 1]");
    if (references.empty() && !candidates.empty())
        throw PreconditionError("partition_targets: no reference views");
    std::vector<Eigen::VectorXd> ref_e;
    for (std::size_t r : references) ref_e.push_back(embed(r));
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t c : candidates) {
        const Eigen::VectorXd e = embed(c);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& re : ref_e) {
            if (re.size() != e.size()) throw PreconditionError("partition_targets: embedding sizes differ");
            best = std::min(best, 1.0 - e.dot(re));
        }
        scored.emplace_back(best, c);
    }
    std::stable_sort(scored.begin(), scored.end());
    const auto n_easy = static_cast<std::size_t>(std::llround(easy_fraction * static_cast<double>(scored.size())));
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < scored.size(); ++i)
        (i < n_easy ? out.first : out.second).push_back(scored[i].second);
    return out;
}

std::vector<CameraView> normalize_translations(std::span<const CameraView> cameras) {
    std::vector<CameraView> out(cameras.begin(), cameras.end());
    if (out.empty()) return out;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& c : out) mean += c.center();
    mean /= static_cast<double>(out.size());
    double extent = 0;
    for (const auto& c : out) extent = std::max(extent, (c.center() - mean).norm());
    if (extent <= 0) return out;
    for (auto& c : out) c.world_to_cam.topRightCorner<3, 1>() /= extent;
    return out;
}

std::vector<ViewGroup> build_view_groups(std::span<const CameraView> cameras, const ViewGroupConfig& cfg,
                                         const EmbeddingHook& embed) {
    if (cfg.inputs < 1 || cfg.inputs >= cfg.group_size)
        throw PreconditionError("build_view_groups: need 1 <= P < group size");
    const std::vector<CameraView> cams = normalize_translations(cameras);
    std::vector<Eigen::Matrix4d> poses;
    for (const auto& c : cams) poses.push_back(c.world_to_cam);
    const PoseGraph graph = build_graph(poses, cfg.group_size, cfg.frustum.threads);
    const auto anchors = sample_anchors(graph, cfg.anchors, derive_seed(cfg.seed, 0));
    const std::vector<Frame> frames = frames_from_cameras(cams);

    std::vector<ViewGroup> groups;
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        const std::uint64_t gseed = derive_seed(cfg.seed, 1 + k);
        ViewGroup grp;
        grp.anchor = anchors[k];
        grp.neighborhood = graph.neighbors[grp.anchor];
        grp.neighborhood.push_back(grp.anchor);
        std::sort(grp.neighborhood.begin(), grp.neighborhood.end());

        std::vector<Frame> local;
        for (std::size_t id : grp.neighborhood) local.push_back(frames[id]);
        grp.inputs = select_inputs(local, cfg.inputs, derive_seed(gseed, 0));

        std::vector<std::size_t> rest;
        std::set_difference(grp.neighborhood.begin(), grp.neighborhood.end(), grp.inputs.begin(),
                            grp.inputs.end(), std::back_inserter(rest));
        auto [easy_c, hard_c] = partition_targets(rest, grp.inputs, embed, cfg.easy_fraction);

        const int targets = cfg.group_size - cfg.inputs;
        const std::size_t n_easy = std::min<std::size_t>(
            easy_c.size(), static_cast<std::size_t>(std::llround(cfg.easy_fraction * targets)));
        if (n_easy > 0) {
            std::vector<Frame> ef;
            for (std::size_t id : easy_c) ef.push_back(frames[id]);
            grp.easy = select_inputs(ef, static_cast<int>(n_easy), derive_seed(gseed, 1));
        }
        const std::size_t want_hard = cfg.hard_count >= 0 ? static_cast<std::size_t>(cfg.hard_count) : n_easy;
        std::sort(hard_c.begin(), hard_c.end());
        Rng rng(derive_seed(gseed, 2));
        for (std::size_t i = 0; i < std::min(want_hard, hard_c.size()); ++i) {
            const std::size_t j = i + uniform_index(rng, hard_c.size() - i);
            std::swap(hard_c[i], hard_c[j]);
            grp.hard.push_back(hard_c[i]);
        }
        std::sort(grp.hard.begin(), grp.hard.end());

        auto keep = [&](std::vector<std::size_t>& ids, std::uint64_t stream) {
            std::vector<std::size_t> kept;
            for (std::size_t id : ids) {
                double best = 0;
                for (std::size_t r : grp.inputs)
                    best = std::max(best, frustum_iou(cams[id], cams[r], cfg.frustum,
                                                      derive_seed(gseed, stream + id * 131 + r)));
                if (best >= cfg.iou_threshold) kept.push_back(id);
            }
            ids = std::move(kept);
        };
        keep(grp.easy, 1000);
        keep(grp.hard, 2000);
        groups.push_back(std::move(grp));
    }
    return groups;
}

}  // namespace splatfeat::prep
