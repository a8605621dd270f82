#include "splatfeat/adapter/feature_loss.hpp"

#include <cmath>
#include <string>

#include "splatfeat/error.hpp"

namespace splatfeat::adapter {

template <class T>
FeatureLoss<T> feature_loss(std::span<const FeatureMap<T>> prediction,
                            std::span<const FeatureMap<T>> target) {
    if (prediction.size() != target.size())
        throw PreconditionError("feature_loss: view counts differ");
    FeatureLoss<T> out;
    std::size_t count = 0;
    T sum_sq = 0;
    // per-pixel (1 - cos) and the pieces needed for d cos / d g
    std::vector<std::vector<T>> terms(prediction.size());
    for (std::size_t v = 0; v < prediction.size(); ++v) {
        const auto& g = prediction[v];
        const auto& f = target[v];
        if (!g.same_shape(f))
            throw PreconditionError("feature_loss: shape mismatch in view " + std::to_string(v));
        terms[v].resize(g.pixel_count());
        for (std::size_t p = 0; p < g.pixel_count(); ++p) {
            const auto gp = g.pixel(p);
            const auto fp = f.pixel(p);
            T gg = 0, ff = 0, gf = 0;
            for (int c = 0; c < g.channels; ++c) {
                gg += gp[c] * gp[c];
                ff += fp[c] * fp[c];
                gf += gp[c] * fp[c];
            }
            T term = 1;
            if (gg > T(0) && ff > T(0))
                term = T(1) - gf / std::sqrt(gg * ff);
            else
                ++out.zero_norm_pixels;
            terms[v][p] = term;
            sum_sq += term * term;
            ++count;
        }
    }
    if (count == 0) throw PreconditionError("feature_loss: no pixels");
    out.value = std::sqrt(sum_sq / static_cast<T>(count));

    out.gradient.reserve(prediction.size());
    for (std::size_t v = 0; v < prediction.size(); ++v) {
        const auto& g = prediction[v];
        const auto& f = target[v];
        FeatureMap<T> grad(g.height, g.width, g.channels);
        grad.view_id = g.view_id;
        grad.downsample = g.downsample;
        if (out.value > T(0)) {
            const T scale = T(1) / (out.value * static_cast<T>(count));
            for (std::size_t p = 0; p < g.pixel_count(); ++p) {
                const auto gp = g.pixel(p);
                const auto fp = f.pixel(p);
                T gg = 0, ff = 0, gf = 0;
                for (int c = 0; c < g.channels; ++c) {
                    gg += gp[c] * gp[c];
                    ff += fp[c] * fp[c];
                    gf += gp[c] * fp[c];
                }
                if (!(gg > T(0) && ff > T(0))) continue;
                const T gn = std::sqrt(gg), fn = std::sqrt(ff);
                const T cos = gf / std::sqrt(gg * ff);
                // dL/dcos = -(1 - cos) / (L * M); dcos/dg = f/(|g||f|) - cos g/|g|^2
                const T k = -terms[v][p] * scale;
                auto out_p = grad.pixel(p);
                for (int c = 0; c < g.channels; ++c)
                    out_p[c] = k * (fp[c] / (gn * fn) - cos * gp[c] / gg);
            }
        }
        out.gradient.push_back(std::move(grad));
    }
    return out;
}

template FeatureLoss<float> feature_loss<float>(std::span<const FeatureMap<float>>,
                                                std::span<const FeatureMap<float>>);
template FeatureLoss<double> feature_loss<double>(std::span<const FeatureMap<double>>,
                                                  std::span<const FeatureMap<double>>);

}  // namespace splatfeat::adapter
