#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "splatfeat/error.hpp"
#include "splatfeat/tensor_io.hpp"

namespace splatfeat {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense H x W x C grid of scalars tied to one view. Pixel (x, y) channel c
/// lives at data[(y * width + x) * channels + c]. Also used for RGB images
/// (C = 3) and single-channel depth maps.
template <class T>
struct FeatureMap {
    std::string view_id;
    int height = 0;
    int width = 0;
    int channels = 0;
    /// Latent-to-pixel factor: bound camera resolution = (height, width) * downsample.
    int downsample = 1;
    std::vector<T> data;

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, T fill = T(0))
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {
        if (h < 0 || w < 0 || c < 0) throw PreconditionError("negative feature map extent");
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const FeatureMap& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    std::span<T> pixel(std::size_t index) {
        return {data.data() + index * channels, static_cast<std::size_t>(channels)};
    }
    std::span<const T> pixel(std::size_t index) const {
        return {data.data() + index * channels, static_cast<std::size_t>(channels)};
    }
    T& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    T at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    /// (H*W) x C token view.
    Eigen::Map<RowMatrix<T>> tokens() {
        return {data.data(), static_cast<Eigen::Index>(pixel_count()), channels};
    }
    Eigen::Map<const RowMatrix<T>> tokens() const {
        return {data.data(), static_cast<Eigen::Index>(pixel_count()), channels};
    }

    template <class U>
    FeatureMap<U> cast() const {
        FeatureMap<U> out;
        out.view_id = view_id;
        out.height = height;
        out.width = width;
        out.channels = channels;
        out.downsample = downsample;
        out.data.assign(data.begin(), data.end());
        return out;
    }
};

using FeatureMapF = FeatureMap<float>;
using FeatureMapD = FeatureMap<double>;

/// Packs maps of identical shape into a P x H x W x C tensor of dtype T.
template <class T>
Tensor stack_to_tensor(std::span<const FeatureMap<T>> maps);

/// Splits a rank-4 (P x H x W x C) or rank-3 (H x W x C) tensor into maps,
/// converting the payload to T.
template <class T>
std::vector<FeatureMap<T>> tensor_to_stack(const Tensor& tensor, int downsample = 1);

}  // namespace splatfeat
