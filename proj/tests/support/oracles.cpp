#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace splatfeat::testing {

template <class T>
NaiveRender<T> naive_render(const GaussianScene& scene, const CameraView& view, const RasterConfig& cfg) {
    auto sorted = project(scene, view, cfg);
    sort_by_depth(sorted);
    NaiveRender<T> out;
    out.width = view.width;
    out.height = view.height;
    const std::size_t pixels = static_cast<std::size_t>(view.width) * view.height;
    out.pixels.resize(pixels);
    out.accumulated.assign(pixels, 0.f);
    const int channels = scene.feature_channels();
    out.features = FeatureMap<T>(view.height, view.width, channels);
    for (int y = 0; y < view.height; ++y) {
        for (int x = 0; x < view.width; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * view.width + x;
            float transmittance = 1.f, acc = 0.f;
            for (const auto& g : sorted) {
                if (static_cast<int>(out.pixels[p].size()) >= cfg.max_contributors) break;
                const float dx = g.mean2d.x() - static_cast<float>(x);
                const float dy = g.mean2d.y() - static_cast<float>(y);
                const float power =
                    -0.5f * (g.conic[0] * dx * dx + g.conic[2] * dy * dy) - g.conic[1] * dx * dy;
                if (power > 0.f) continue;
                const float alpha = std::min(cfg.alpha_max, g.opacity * std::exp(power));
                if (alpha < cfg.alpha_min) continue;
                const float next_t = transmittance * (1.f - alpha);
                if (next_t < cfg.transmittance_min) break;
                const float w = alpha * transmittance;
                out.pixels[p].push_back({g.gaussian_id, alpha, w});
                for (int c = 0; c < channels; ++c)
                    out.features.data[p * channels + c] +=
                        static_cast<T>(scene.features()(g.gaussian_id, c)) * static_cast<T>(w);
                acc += w;
                transmittance = next_t;
            }
            out.accumulated[p] = acc;
        }
    }
    return out;
}

template NaiveRender<float> naive_render<float>(const GaussianScene&, const CameraView&, const RasterConfig&);
template NaiveRender<double> naive_render<double>(const GaussianScene&, const CameraView&, const RasterConfig&);

Eigen::SparseMatrix<double, Eigen::RowMajor> weight_matrix(std::span<const ContributionMap> maps,
                                                           std::size_t gaussian_count) {
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::Index row = 0;
    for (const auto& m : maps) {
        for (std::size_t p = 0; p < m.pixel_count(); ++p, ++row)
            for (const auto& c : m.pixel(p)) trips.emplace_back(row, c.gaussian_id, c.weight);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> w(row, static_cast<Eigen::Index>(gaussian_count));
    w.setFromTriplets(trips.begin(), trips.end());
    return w;
}

RowMatrix<double> reference_lift(std::span<const FeatureMap<double>> maps,
                                 std::span<const ContributionMap> contributions, std::size_t gaussian_count,
                                 bool hard) {
    const int channels = maps.empty() ? 0 : maps.front().channels;
    RowMatrix<double> num = RowMatrix<double>::Zero(static_cast<Eigen::Index>(gaussian_count), channels);
    std::vector<double> den(gaussian_count, 0.0);
    for (std::size_t v = 0; v < maps.size(); ++v) {
        for (std::size_t p = 0; p < contributions[v].pixel_count(); ++p) {
            const auto list = contributions[v].pixel(p);
            if (list.empty()) continue;
            auto add = [&](const Contribution& c) {
                const double w = c.weight;
                for (int ch = 0; ch < channels; ++ch) num(c.gaussian_id, ch) += w * maps[v].pixel(p)[ch];
                den[c.gaussian_id] += w;
            };
            if (hard) {
                const Contribution* best = &list[0];
                for (const auto& c : list)
                    if (c.weight > best->weight) best = &c;
                add(*best);
            } else {
                for (const auto& c : list) add(c);
            }
        }
    }
    for (std::size_t i = 0; i < gaussian_count; ++i)
        if (den[i] > 0) num.row(static_cast<Eigen::Index>(i)) /= den[i];
    return num;
}

double brute_chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b) {
    auto one_way = [](std::span<const Eigen::Vector3d> from, std::span<const Eigen::Vector3d> to) {
        double sum = 0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to) {
                const double dx = p.x() - q.x(), dy = p.y() - q.y(), dz = p.z() - q.z();
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return one_way(a, b) + one_way(b, a);
}

double golden_section_min(const std::function<Quad(Quad)>& f, double lo, double hi, double tol) {
    // Quad precision: a value-only search resolves the argmin to about sqrt(eps)
    const Quad r = (Quad(2.2360679774997896964) - 1) / 2;
    Quad a = lo, b = hi;
    Quad c = b - r * (b - a), d = a + r * (b - a);
    Quad fc = f(c), fd = f(d);
    for (int it = 0; it < 1000 && b - a > Quad(tol) * (Quad(1) + (a < 0 ? -a : a) + (b < 0 ? -b : b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return static_cast<double>((a + b) / 2);
}

std::size_t occupied_voxels(std::span<const Eigen::Vector3f> points, double size) {
    std::set<std::tuple<long long, long long, long long>> cells;
    for (const auto& p : points)
        cells.emplace(static_cast<long long>(std::floor(p.x() / size)), static_cast<long long>(std::floor(p.y() / size)),
                      static_cast<long long>(std::floor(p.z() / size)));
    return cells.size();
}

std::vector<std::size_t> exhaustive_two_means_medoids(std::span<const Eigen::VectorXd> points) {
    const std::size_t n = points.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> result;
    for (std::uint64_t mask = 1; mask + 1 < (1ull << n); ++mask) {
        if (mask & 1ull) continue;  // each partition once: point 0 always in cluster 0
        Eigen::VectorXd c[2] = {Eigen::VectorXd::Zero(points[0].size()), Eigen::VectorXd::Zero(points[0].size())};
        double cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int k = (mask >> i) & 1ull;
            c[k] += points[i];
            cnt[k] += 1;
        }
        c[0] /= cnt[0];
        c[1] /= cnt[1];
        double sse = 0;
        for (std::size_t i = 0; i < n; ++i) sse += (points[i] - c[(mask >> i) & 1ull]).squaredNorm();
        if (sse < best) {
            best = sse;
            result.clear();
            for (int k = 0; k < 2; ++k) {
                std::size_t arg = 0;
                double d = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < n; ++i) {
                    if (static_cast<int>((mask >> i) & 1ull) != k) continue;
                    const double di = (points[i] - c[k]).squaredNorm();
                    if (di < d) {
                        d = di;
                        arg = i;
                    }
                }
                result.push_back(arg);
            }
            std::sort(result.begin(), result.end());
        }
    }
    return result;
}

double chi_square_uniform(std::span<const std::size_t> counts) {
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double chi = 0;
    for (auto c : counts) chi += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    return chi;
}

}  // namespace splatfeat::testing
