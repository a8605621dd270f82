#include "splatfeat/adapter/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "layers.hpp"
#include "splatfeat/error.hpp"

namespace splatfeat::adapter {

namespace {

bool power_of_two_ratio(int a, int b) {
    if (a <= 0 || b <= 0) return false;
    const int hi = std::max(a, b), lo = std::min(a, b);
    if (hi % lo != 0) return false;
    const int r = hi / lo;
    return (r & (r - 1)) == 0;
}

struct Tap {
    int i0, i1;
    double t;
};

std::vector<Tap> taps(int in, int out) {
    std::vector<Tap> result(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * ratio - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const int i0 = static_cast<int>(std::floor(src));
        const int i1 = std::min(i0 + 1, in - 1);
        result[o] = {i0, i1, src - i0};
    }
    return result;
}

template <class T>
T lerp(T a, T b, T t) {
    return a + t * (b - a);
}

template <class T>
void check_levels(std::span<const FeatureMap<T>> levels, const FusionParams<T>& params, int th, int tw) {
    if (levels.empty()) throw PreconditionError("multiscale: no levels");
    if (params.level_in.size() != levels.size() || params.level_out.size() != levels.size())
        throw PreconditionError("multiscale: params hold " + std::to_string(params.level_in.size()) +
                                " level projections for " + std::to_string(levels.size()) + " levels");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto& lv = levels[l];
        if (!power_of_two_ratio(lv.height, th) || !power_of_two_ratio(lv.width, tw))
            throw PreconditionError("multiscale: level " + std::to_string(l) + " (" +
                                    std::to_string(lv.height) + "x" + std::to_string(lv.width) +
                                    ") is not a power-of-two factor of the target");
        if (l > 0 && (lv.height < levels[l - 1].height || lv.width < levels[l - 1].width))
            throw PreconditionError("multiscale: levels must be ordered coarse to fine");
        if (lv.channels != params.level_in[l].in())
            throw PreconditionError("multiscale: level " + std::to_string(l) + " channel mismatch");
    }
}

}  // namespace

template <class T>
FeatureMap<T> resize_bilinear(const FeatureMap<T>& input, int height, int width) {
    if (height <= 0 || width <= 0 || input.height <= 0 || input.width <= 0)
        throw PreconditionError("resize_bilinear: empty extent");
    if (height == input.height && width == input.width) return input;
    FeatureMap<T> out(height, width, input.channels);
    out.view_id = input.view_id;
    out.downsample = input.downsample * input.height / height;
    const auto ty = taps(input.height, height);
    const auto tx = taps(input.width, width);
    const int c = input.channels;
    for (int y = 0; y < height; ++y) {
        const T fy = static_cast<T>(ty[y].t);
        for (int x = 0; x < width; ++x) {
            const T fx = static_cast<T>(tx[x].t);
            for (int ch = 0; ch < c; ++ch) {
                const T top = lerp(input.at(ty[y].i0, tx[x].i0, ch), input.at(ty[y].i0, tx[x].i1, ch), fx);
                const T bot = lerp(input.at(ty[y].i1, tx[x].i0, ch), input.at(ty[y].i1, tx[x].i1, ch), fx);
                out.at(y, x, ch) = lerp(top, bot, fy);
            }
        }
    }
    return out;
}

template <class T>
FeatureMap<T> multiscale_aggregate(std::span<const FeatureMap<T>> levels,
                                   const FusionParams<T>& params, const MultiScaleConfig& cfg) {
    check_levels(levels, params, cfg.target_height, cfg.target_width);
    FeatureMap<T> acc;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        FeatureMap<T> projected(levels[l].height, levels[l].width, params.config.channels);
        projected.view_id = levels[l].view_id;
        projected.downsample = levels[l].downsample;
        projected.tokens() = detail::affine_forward<T>(levels[l].tokens(), params.level_in[l]);
        FeatureMap<T> y = resize_bilinear(projected, cfg.target_height, cfg.target_width);
        if (l == 0) {
            acc = std::move(y);
            continue;
        }
        if (cfg.merge == MergeMode::kResidual) {
            acc.tokens() += y.tokens();
        } else {
            const T inv = T(1) / static_cast<T>(l + 1);
            acc.tokens() += (y.tokens() - acc.tokens()) * inv;
        }
    }
    return acc;
}

template <class T>
std::vector<FeatureMap<T>> multiscale_scatter(const FeatureMap<T>& fused,
                                              std::span<const FeatureMap<T>> levels,
                                              const FusionParams<T>& params) {
    check_levels(levels, params, fused.height, fused.width);
    if (fused.channels != params.config.channels)
        throw PreconditionError("multiscale_scatter: fused map channel mismatch");
    std::vector<FeatureMap<T>> out;
    out.reserve(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const FeatureMap<T> resized = resize_bilinear(fused, levels[l].height, levels[l].width);
        FeatureMap<T> skip(levels[l].height, levels[l].width, params.level_out[l].out());
        skip.view_id = levels[l].view_id;
        skip.downsample = levels[l].downsample;
        skip.tokens() = detail::affine_forward<T>(resized.tokens(), params.level_out[l]);
        out.push_back(std::move(skip));
    }
    return out;
}

#define SPLATFEAT_INSTANTIATE(T)                                                               \
    template FeatureMap<T> resize_bilinear<T>(const FeatureMap<T>&, int, int);                 \
    template FeatureMap<T> multiscale_aggregate<T>(std::span<const FeatureMap<T>>,             \
                                                   const FusionParams<T>&,                     \
                                                   const MultiScaleConfig&);                   \
    template std::vector<FeatureMap<T>> multiscale_scatter<T>(                                 \
        const FeatureMap<T>&, std::span<const FeatureMap<T>>, const FusionParams<T>&);

SPLATFEAT_INSTANTIATE(float)
SPLATFEAT_INSTANTIATE(double)

#undef SPLATFEAT_INSTANTIATE

}  // namespace splatfeat::adapter
