#include "splatfeat/rasterizer.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "splatfeat/error.hpp"
#include "splatfeat/parallel.hpp"
#include "splatfeat/sh.hpp"

namespace splatfeat {
namespace {

Eigen::Matrix3d quat_to_rotation(const Eigen::Vector4f& q) {
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

struct TileGrid {
    int tile_size;
    int tiles_x;
    int tiles_y;
    // CSR lists of indices into the depth-sorted projected array.
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> members;

    int count() const { return tiles_x * tiles_y; }
};

struct PixelRange {
    int x0, x1, y0, y1;
};

PixelRange pixel_range(const ProjectedGaussian& g, int width, int height) {
    return {std::max(0, static_cast<int>(std::ceil(g.mean2d.x() - g.radius))),
            std::min(width - 1, static_cast<int>(std::floor(g.mean2d.x() + g.radius))),
            std::max(0, static_cast<int>(std::ceil(g.mean2d.y() - g.radius))),
            std::min(height - 1, static_cast<int>(std::floor(g.mean2d.y() + g.radius)))};
}

TileGrid bin_tiles(std::span<const ProjectedGaussian> sorted, int width, int height, int tile_size) {
    TileGrid grid{tile_size, (width + tile_size - 1) / tile_size,
                  (height + tile_size - 1) / tile_size, {}, {}};
    grid.offsets.assign(static_cast<std::size_t>(grid.count()) + 1, 0);
    auto for_each_tile = [&](const ProjectedGaussian& g, auto&& fn) {
        const PixelRange r = pixel_range(g, width, height);
        if (r.x0 > r.x1 || r.y0 > r.y1) return;
        for (int ty = r.y0 / tile_size; ty <= r.y1 / tile_size; ++ty)
            for (int tx = r.x0 / tile_size; tx <= r.x1 / tile_size; ++tx)
                fn(ty * grid.tiles_x + tx);
    };
    for (const auto& g : sorted) for_each_tile(g, [&](int t) { ++grid.offsets[t + 1]; });
    for (int t = 0; t < grid.count(); ++t) grid.offsets[t + 1] += grid.offsets[t];
    grid.members.resize(grid.offsets.back());
    std::vector<std::uint32_t> cursor(grid.offsets.begin(), grid.offsets.end() - 1);
    // Appending in sorted order keeps each tile list front to back.
    for (std::uint32_t i = 0; i < sorted.size(); ++i)
        for_each_tile(sorted[i], [&](int t) { grid.members[cursor[t]++] = i; });
    return grid;
}

// Front-to-back compositing over tiles. `sink` receives
//   add(pixel, sorted_index, weight) for every accepted contribution and
//   finish(pixel, accumulated_alpha) once per pixel.
template <class Sink>
void composite(std::span<const ProjectedGaussian> sorted, int width, int height,
               const RasterConfig& cfg, Sink& sink, ContributionMap* contributions,
               DominantMap& dominant) {
    const std::size_t pixels = static_cast<std::size_t>(width) * height;
    dominant.width = width;
    dominant.height = height;
    dominant.ids.assign(pixels, kNoGaussian);
    dominant.weights.assign(pixels, 0.f);
    if (pixels == 0) {
        if (contributions) {
            contributions->width = width;
            contributions->height = height;
            contributions->offsets.assign(1, 0);
        }
        return;
    }

    const TileGrid grid = bin_tiles(sorted, width, height, cfg.tile_size);
    const bool record = contributions != nullptr;
    std::vector<std::vector<Contribution>> tile_entries(record ? grid.count() : 0);
    std::vector<std::uint32_t> counts(record ? pixels : 0);
    std::vector<std::uint32_t> local_start(record ? pixels : 0);
    std::vector<float> accumulated(pixels, 0.f);

    parallel_for(static_cast<std::size_t>(grid.count()), cfg.threads, [&](std::size_t tb, std::size_t te) {
        for (std::size_t t = tb; t < te; ++t) {
            const int tx = static_cast<int>(t) % grid.tiles_x;
            const int ty = static_cast<int>(t) / grid.tiles_x;
            const std::uint32_t* list = grid.members.data() + grid.offsets[t];
            const std::uint32_t list_size = grid.offsets[t + 1] - grid.offsets[t];
            std::vector<Contribution>* buf = record ? &tile_entries[t] : nullptr;
            const int y_end = std::min(height, (ty + 1) * grid.tile_size);
            const int x_end = std::min(width, (tx + 1) * grid.tile_size);
            for (int y = ty * grid.tile_size; y < y_end; ++y) {
                for (int x = tx * grid.tile_size; x < x_end; ++x) {
                    const std::size_t p = static_cast<std::size_t>(y) * width + x;
                    const float px = static_cast<float>(x);
                    const float py = static_cast<float>(y);
                    float transmittance = 1.f;
                    float acc = 0.f;
                    int n = 0;
                    float best_w = 0.f;
                    std::uint32_t best_id = kNoGaussian;
                    if (buf) local_start[p] = static_cast<std::uint32_t>(buf->size());
                    for (std::uint32_t k = 0; k < list_size && n < cfg.max_contributors; ++k) {
                        const ProjectedGaussian& g = sorted[list[k]];
                        const float dx = g.mean2d.x() - px;
                        const float dy = g.mean2d.y() - py;
                        const float power = -0.5f * (g.conic[0] * dx * dx + g.conic[2] * dy * dy) -
                                            g.conic[1] * dx * dy;
                        if (power > 0.f) continue;
                        const float alpha = std::min(cfg.alpha_max, g.opacity * std::exp(power));
                        if (alpha < cfg.alpha_min) continue;
                        const float next_t = transmittance * (1.f - alpha);
                        if (next_t < cfg.transmittance_min) break;
                        const float w = alpha * transmittance;
                        sink.add(p, list[k], w);
                        if (buf) buf->push_back({g.gaussian_id, alpha, w});
                        if (w > best_w) {
                            best_w = w;
                            best_id = g.gaussian_id;
                        }
                        acc += w;
                        transmittance = next_t;
                        ++n;
                    }
                    if (record) counts[p] = static_cast<std::uint32_t>(n);
                    accumulated[p] = acc;
                    dominant.ids[p] = best_id;
                    dominant.weights[p] = best_w;
                    sink.finish(p, acc);
                }
            }
        }
    });

    if (!record) return;
    contributions->width = width;
    contributions->height = height;
    contributions->offsets.assign(pixels + 1, 0);
    for (std::size_t p = 0; p < pixels; ++p)
        contributions->offsets[p + 1] = contributions->offsets[p] + counts[p];
    contributions->entries.resize(contributions->offsets.back());
    for (std::size_t p = 0; p < pixels; ++p) {
        const int x = static_cast<int>(p % width);
        const int y = static_cast<int>(p / width);
        const auto& buf = tile_entries[(y / grid.tile_size) * grid.tiles_x + x / grid.tile_size];
        std::copy_n(buf.begin() + local_start[p], counts[p],
                    contributions->entries.begin() + contributions->offsets[p]);
    }
    contributions->accumulated_alpha = std::move(accumulated);
}

struct NullSink {
    void add(std::size_t, std::uint32_t, float) {}
    void finish(std::size_t, float) {}
};

struct ColorSink {
    std::span<const Eigen::Vector3f> colors;  // by sorted index
    FeatureMap<float>& image;
    void add(std::size_t p, std::uint32_t k, float w) {
        float* px = image.data.data() + p * 3;
        px[0] += colors[k][0] * w;
        px[1] += colors[k][1] * w;
        px[2] += colors[k][2] * w;
    }
    void finish(std::size_t, float) {}
};

template <class T>
struct FeatureSink {
    const T* features;  // sorted-index-major rows of width `channels`
    int channels;
    bool normalize;
    FeatureMap<T>& out;
    void add(std::size_t p, std::uint32_t k, float w) {
        T* px = out.data.data() + p * channels;
        const T* f = features + static_cast<std::size_t>(k) * channels;
        const T wt = static_cast<T>(w);
        for (int c = 0; c < channels; ++c) px[c] += f[c] * wt;
    }
    void finish(std::size_t p, float acc) {
        if (!normalize || acc <= 0.f) return;
        T* px = out.data.data() + p * channels;
        const T a = static_cast<T>(acc);
        for (int c = 0; c < channels; ++c) px[c] /= a;
    }
};

void check_config(const RasterConfig& cfg) {
    if (cfg.tile_size <= 0) throw PreconditionError("tile size must be positive");
    if (cfg.max_contributors <= 0) throw PreconditionError("max_contributors must be positive");
}

std::vector<ProjectedGaussian> project_sorted(const GaussianScene& scene, const CameraView& view,
                                              const RasterConfig& cfg) {
    check_config(cfg);
    auto projected = project(scene, view, cfg);
    sort_by_depth(projected);
    return projected;
}

}  // namespace

bool ContributionMap::operator==(const ContributionMap& o) const {
    return width == o.width && height == o.height && offsets == o.offsets &&
           entries == o.entries && accumulated_alpha == o.accumulated_alpha;
}

std::vector<ProjectedGaussian> project(const GaussianScene& scene, const CameraView& view,
                                       const RasterConfig& cfg, ProjectionStats* stats) {
    ProjectionStats local;
    const Eigen::Matrix3d w = view.rotation();
    const Eigen::Vector3d t = view.translation();
    // Jacobian clamp keeps off-screen Gaussians from producing huge footprints.
    const double lim_x0 = (-0.5 - view.cx) / view.fx, lim_x1 = (view.width - 0.5 - view.cx) / view.fx;
    const double lim_y0 = (-0.5 - view.cy) / view.fy, lim_y1 = (view.height - 0.5 - view.cy) / view.fy;
    const double pad_x = 0.15 * (lim_x1 - lim_x0), pad_y = 0.15 * (lim_y1 - lim_y0);

    std::vector<ProjectedGaussian> out;
    out.reserve(scene.size());
    const auto gaussians = scene.gaussians();
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const Gaussian& g = gaussians[i];
        const Eigen::Vector3d cam = w * g.position.cast<double>() + t;
        if (!(cam.z() > static_cast<double>(cfg.near_plane))) {
            ++local.culled_near;
            continue;
        }
        if (g.opacity < cfg.alpha_min) {
            ++local.culled_offscreen;
            continue;
        }
        const double z = cam.z();
        const double xz = std::clamp(cam.x() / z, lim_x0 - pad_x, lim_x1 + pad_x);
        const double yz = std::clamp(cam.y() / z, lim_y0 - pad_y, lim_y1 + pad_y);
        Eigen::Matrix<double, 2, 3> jac;
        jac << view.fx / z, 0.0, -view.fx * xz / z, 0.0, view.fy / z, -view.fy * yz / z;

        const Eigen::Matrix3d m = quat_to_rotation(g.rotation) * g.scale.cast<double>().asDiagonal();
        const Eigen::Matrix3d sigma = m * m.transpose();
        const Eigen::Matrix<double, 2, 3> jw = jac * w;
        Eigen::Matrix2d cov = jw * sigma * jw.transpose();
        cov(0, 0) += cfg.cov2d_floor;
        cov(1, 1) += cfg.cov2d_floor;
        cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
        const double det = cov.determinant();
        if (!(det > 0.0)) {
            ++local.culled_offscreen;
            continue;
        }

        ProjectedGaussian pg;
        pg.gaussian_id = static_cast<std::uint32_t>(i);
        pg.mean2d = Eigen::Vector2d(view.fx * cam.x() / z + view.cx, view.fy * cam.y() / z + view.cy)
                        .cast<float>();
        pg.cov2d = cov.cast<float>();
        pg.conic = Eigen::Vector3d(cov(1, 1) / det, -cov(0, 1) / det, cov(0, 0) / det).cast<float>();
        pg.depth = static_cast<float>(z);
        pg.opacity = g.opacity;
        // alpha = opacity * exp(-m/2) >= alpha_min needs m <= 2 ln(opacity / alpha_min), and
        // m >= |d|^2 / lambda_max. The margin absorbs float rounding in the kernel.
        const double half_tr = 0.5 * (cov(0, 0) + cov(1, 1));
        const double lambda_max =
            half_tr + std::sqrt(std::max(0.0, half_tr * half_tr - det));
        const double m_cut = 2.0 * std::log(static_cast<double>(g.opacity) / cfg.alpha_min);
        pg.radius = static_cast<float>(1.02 * std::sqrt(lambda_max * std::max(0.0, m_cut)) + 1.0);

        const PixelRange r = pixel_range(pg, view.width, view.height);
        if (r.x0 > r.x1 || r.y0 > r.y1) {
            ++local.culled_offscreen;
            continue;
        }
        out.push_back(pg);
    }
    if (stats) *stats = local;
    return out;
}

void sort_by_depth(std::vector<ProjectedGaussian>& projected) {
    std::sort(projected.begin(), projected.end(), [](const auto& a, const auto& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.gaussian_id < b.gaussian_id;
    });
}

DominantMap dominant_from(const ContributionMap& contributions) {
    DominantMap d;
    d.width = contributions.width;
    d.height = contributions.height;
    d.ids.assign(contributions.pixel_count(), kNoGaussian);
    d.weights.assign(contributions.pixel_count(), 0.f);
    for (std::size_t p = 0; p < contributions.pixel_count(); ++p) {
        for (const auto& c : contributions.pixel(p)) {
            if (c.weight > d.weights[p]) {
                d.weights[p] = c.weight;
                d.ids[p] = c.gaussian_id;
            }
        }
    }
    return d;
}

ColorRender rasterize_color(const GaussianScene& scene, const CameraView& view,
                            const RasterConfig& cfg) {
    const auto sorted = project_sorted(scene, view, cfg);
    std::vector<Eigen::Vector3f> colors(sorted.size());
    const Eigen::Vector3f eye = view.center().cast<float>();
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const Gaussian& g = scene[sorted[k].gaussian_id];
        if (cfg.view_dependent_color && scene.sh_degree() > 0) {
            Eigen::Vector3f dir = g.position - eye;
            const float n = dir.norm();
            if (n > 0.f) dir /= n;
            colors[k] = sh_color(g, scene.sh_degree(), dir);
        } else {
            colors[k] = sh_dc_color(g);
        }
    }
    ColorRender out;
    out.image = FeatureMap<float>(view.height, view.width, 3);
    out.image.view_id = view.id;
    ColorSink sink{colors, out.image};
    composite(std::span<const ProjectedGaussian>(sorted), view.width, view.height, cfg, sink,
              cfg.record_contributions ? &out.contributions : nullptr, out.dominant);
    return out;
}

template <class T>
FeatureRender<T> rasterize_features(const GaussianScene& scene, const CameraView& view,
                                    const RasterConfig& cfg) {
    if (!scene.has_features())
        throw PreconditionError("rasterize_features: scene has no per-Gaussian features");
    const auto& feats = scene.features();
    const int channels = static_cast<int>(feats.cols());
    const auto sorted = project_sorted(scene, view, cfg);
    std::vector<T> gathered(sorted.size() * static_cast<std::size_t>(channels));
    for (std::size_t k = 0; k < sorted.size(); ++k)
        for (int c = 0; c < channels; ++c)
            gathered[k * channels + c] = static_cast<T>(feats(sorted[k].gaussian_id, c));

    FeatureRender<T> out;
    out.features = FeatureMap<T>(view.height, view.width, channels);
    out.features.view_id = view.id;
    FeatureSink<T> sink{gathered.data(), channels, cfg.normalize_features, out.features};
    composite(std::span<const ProjectedGaussian>(sorted), view.width, view.height, cfg, sink,
              cfg.record_contributions ? &out.contributions : nullptr, out.dominant);
    return out;
}

template FeatureRender<float> rasterize_features<float>(const GaussianScene&, const CameraView&,
                                                        const RasterConfig&);
template FeatureRender<double> rasterize_features<double>(const GaussianScene&, const CameraView&,
                                                          const RasterConfig&);

ContributionMap rasterize_weights(const GaussianScene& scene, const CameraView& view,
                                  const RasterConfig& cfg) {
    const auto sorted = project_sorted(scene, view, cfg);
    ContributionMap map;
    DominantMap dominant;
    NullSink sink;
    composite(std::span<const ProjectedGaussian>(sorted), view.width, view.height, cfg, sink, &map,
              dominant);
    return map;
}

FeatureMap<double> render_depth_points(std::span<const Eigen::Vector3d> points,
                                       const CameraView& view) {
    FeatureMap<double> depth(view.height, view.width, 1, std::numeric_limits<double>::infinity());
    depth.view_id = view.id;
    for (const auto& pt : points) {
        const Eigen::Vector3d cam = view.to_camera(pt);
        if (!(cam.z() > 0.0)) continue;
        const Eigen::Vector2d uv = view.project(cam);
        const double u = std::floor(uv.x() + 0.5), v = std::floor(uv.y() + 0.5);
        if (u < 0 || v < 0 || u >= view.width || v >= view.height) continue;
        double& d = depth.at(static_cast<int>(v), static_cast<int>(u), 0);
        d = std::min(d, cam.z());
    }
    return depth;
}

FeatureMap<double> render_depth_points(const GaussianScene& scene, const CameraView& view) {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(scene.size());
    for (const auto& g : scene.gaussians()) pts.push_back(g.position.cast<double>());
    return render_depth_points(pts, view);
}

}  // namespace splatfeat
