#include "splatfeat/adapter/positional_encoding.hpp"

#include <cmath>
#include <string>

#include "splatfeat/error.hpp"

namespace splatfeat::adapter {

std::vector<double> pe_frequencies(int channels, const PEConfig& cfg) {
    if (channels <= 0 || channels % 4 != 0)
        throw PreconditionError("GS-PE: channel count " + std::to_string(channels) +
                                " is not divisible by 4");
    const int d = channels / 4;
    if (d % 2 != 0)
        throw PreconditionError("GS-PE: C/4 = " + std::to_string(d) +
                                " must be even to hold sin/cos pairs");
    std::vector<double> freqs(static_cast<std::size_t>(d / 2));
    for (int k = 0; k < d / 2; ++k)
        freqs[k] = std::pow(cfg.omega0, -2.0 * k / static_cast<double>(d));
    return freqs;
}

template <class T>
void sinusoid_encode(T value, const std::vector<double>& freqs, T* out) {
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        const double a = freqs[k] * static_cast<double>(value);
        out[2 * k] = static_cast<T>(std::sin(a));
        out[2 * k + 1] = static_cast<T>(std::cos(a));
    }
}

template <class T>
FeatureMap<T> gs_pe(const FeatureMap<T>& rendered, const DominantMap& dominant,
                    const GaussianScene& scene, const PEConfig& cfg) {
    const auto freqs = pe_frequencies(rendered.channels, cfg);
    const int d = rendered.channels / 4;
    if (dominant.width != rendered.width || dominant.height != rendered.height)
        throw PreconditionError("GS-PE: dominant map resolution differs from the feature map");
    const BoundingBox& box = scene.bbox();
    const Eigen::Vector3d lo = box.min.cast<double>();
    const Eigen::Vector3d extent = box.extent().cast<double>();

    FeatureMap<T> out = rendered;
    std::vector<T> code(static_cast<std::size_t>(rendered.channels));
    for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
        double v[4] = {0.0, 0.0, 0.0, 0.0};
        const std::uint32_t id = dominant.ids[p];
        if (id != kNoGaussian) {
            if (id >= scene.size())
                throw ValidationError("GS-PE: dominant id " + std::to_string(id) + " out of range");
            const Eigen::Vector3d pos = scene[id].position.cast<double>();
            for (int a = 0; a < 3; ++a) v[a] = extent[a] > 0.0 ? (pos[a] - lo[a]) / extent[a] : 0.0;
            v[3] = dominant.weights[p];
        }
        for (int j = 0; j < 4; ++j) sinusoid_encode(static_cast<T>(v[j]), freqs, code.data() + j * d);
        auto px = out.pixel(p);
        for (int c = 0; c < rendered.channels; ++c) px[c] += code[c];
    }
    return out;
}

template void sinusoid_encode<float>(float, const std::vector<double>&, float*);
template void sinusoid_encode<double>(double, const std::vector<double>&, double*);
template FeatureMap<float> gs_pe<float>(const FeatureMap<float>&, const DominantMap&,
                                        const GaussianScene&, const PEConfig&);
template FeatureMap<double> gs_pe<double>(const FeatureMap<double>&, const DominantMap&,
                                          const GaussianScene&, const PEConfig&);

}  // namespace splatfeat::adapter
