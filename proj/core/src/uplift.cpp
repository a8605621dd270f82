#include "splatfeat/uplift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "splatfeat/error.hpp"
#include "splatfeat/parallel.hpp"

namespace splatfeat {

void select_top_k(std::span<const Contribution> list, int top_k, std::vector<std::size_t>& kept) {
    kept.resize(list.size());
    std::iota(kept.begin(), kept.end(), std::size_t{0});
    if (top_k == LiftConfig::kAll || static_cast<std::size_t>(top_k) >= list.size()) return;
    std::stable_sort(kept.begin(), kept.end(),
                     [&](std::size_t a, std::size_t b) { return list[a].weight > list[b].weight; });
    kept.resize(static_cast<std::size_t>(top_k));
    std::sort(kept.begin(), kept.end());
}

template <class T>
RowMatrix<T> lift(std::span<const FeatureMap<T>> feature_maps,
                  std::span<const ContributionMap> contributions, std::size_t gaussian_count,
                  const LiftConfig& cfg) {
    if (cfg.top_k < 0) throw PreconditionError("lift: top_k must be >= 1 or 'all'");
    if (feature_maps.size() != contributions.size())
        throw PreconditionError("lift: " + std::to_string(feature_maps.size()) + " feature maps but " +
                                std::to_string(contributions.size()) + " contribution maps");
    const int channels = feature_maps.empty() ? 0 : feature_maps.front().channels;
    for (std::size_t v = 0; v < feature_maps.size(); ++v) {
        const auto& fm = feature_maps[v];
        const auto& cm = contributions[v];
        if (fm.channels != channels)
            throw PreconditionError("lift: view " + std::to_string(v) + " has " +
                                    std::to_string(fm.channels) + " channels, expected " +
                                    std::to_string(channels));
        if (fm.width != cm.width || fm.height != cm.height)
            throw PreconditionError("lift: view " + std::to_string(v) + " feature map is " +
                                    std::to_string(fm.width) + "x" + std::to_string(fm.height) +
                                    " but contributions are " + std::to_string(cm.width) + "x" +
                                    std::to_string(cm.height));
    }

    // Gather every kept (view, pixel, weight) record grouped by Gaussian,
    // in canonical (view, pixel, list) order. Each Gaussian is then reduced
    // sequentially over its own records, so the result does not depend on
    // how Gaussians are spread over threads.
    struct Record {
        std::uint32_t view;
        std::uint32_t pixel;
        float weight;
    };
    std::vector<std::uint32_t> offsets(gaussian_count + 1, 0);
    std::vector<std::size_t> kept;
    auto visit = [&](auto&& fn) {
        for (std::size_t v = 0; v < contributions.size(); ++v) {
            const auto& cm = contributions[v];
            for (std::size_t p = 0; p < cm.pixel_count(); ++p) {
                const auto list = cm.pixel(p);
                select_top_k(list, cfg.top_k, kept);
                for (auto k : kept) {
                    const auto& c = list[k];
                    if (c.gaussian_id >= gaussian_count)
                        throw ValidationError("lift: gaussian id " + std::to_string(c.gaussian_id) +
                                              " out of range (N = " + std::to_string(gaussian_count) +
                                              ") in view " + std::to_string(v));
                    fn(c.gaussian_id, Record{static_cast<std::uint32_t>(v),
                                             static_cast<std::uint32_t>(p), c.weight});
                }
            }
        }
    };
    visit([&](std::uint32_t id, const Record&) { ++offsets[id + 1]; });
    for (std::size_t i = 0; i < gaussian_count; ++i) offsets[i + 1] += offsets[i];
    std::vector<Record> records(offsets.back());
    {
        std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
        visit([&](std::uint32_t id, const Record& r) { records[cursor[id]++] = r; });
    }

    RowMatrix<T> out = RowMatrix<T>::Zero(static_cast<Eigen::Index>(gaussian_count), channels);
    parallel_for(gaussian_count, cfg.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<T> acc(static_cast<std::size_t>(channels));
        for (std::size_t i = begin; i < end; ++i) {
            if (offsets[i] == offsets[i + 1]) continue;
            std::fill(acc.begin(), acc.end(), T(0));
            T total = 0;
            for (std::uint32_t r = offsets[i]; r < offsets[i + 1]; ++r) {
                const Record& rec = records[r];
                const T w = static_cast<T>(rec.weight);
                const auto f = feature_maps[rec.view].pixel(rec.pixel);
                for (int c = 0; c < channels; ++c) acc[c] += w * f[c];
                total += w;
            }
            auto row = out.row(static_cast<Eigen::Index>(i));
            for (int c = 0; c < channels; ++c) row[c] = acc[c] / total;
            if (cfg.normalize_output) {
                const T norm = row.norm();
                if (norm > T(1e-12)) row /= norm;
            }
        }
    });
    return out;
}

template RowMatrix<float> lift<float>(std::span<const FeatureMap<float>>,
                                      std::span<const ContributionMap>, std::size_t,
                                      const LiftConfig&);
template RowMatrix<double> lift<double>(std::span<const FeatureMap<double>>,
                                        std::span<const ContributionMap>, std::size_t,
                                        const LiftConfig&);

GaussianScene attach_features(const GaussianScene& scene, const RowMatrix<double>& features) {
    if (static_cast<std::size_t>(features.rows()) != scene.size())
        throw PreconditionError("attach_features: " + std::to_string(features.rows()) +
                                " rows for " + std::to_string(scene.size()) + " Gaussians");
    return scene.with_features(features);
}

}  // namespace splatfeat
