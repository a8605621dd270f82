#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splatfeat/feature_map.hpp"

namespace splatfeat::adapter {

/// Row-vector affine map y = x W + b applied to every token row.
template <class T>
struct Affine {
    RowMatrix<T> weight;  // in x out
    RowMatrix<T> bias;    // 1 x out

    static Affine zeros(int in, int out) {
        return {RowMatrix<T>::Zero(in, out), RowMatrix<T>::Zero(1, out)};
    }
    int in() const { return static_cast<int>(weight.rows()); }
    int out() const { return static_cast<int>(weight.cols()); }
};

/// Residual block: x + n2(conv2(silu(n1(conv1(x))))), where n(h) = h * scale + shift
/// per channel and conv is a zero-padded 3x3 convolution.
/// Kernel rows are indexed (ky * 3 + kx) * C + c_in, columns by c_out.
template <class T>
struct ConvBlock {
    RowMatrix<T> conv1, conv2;    // 9C x C
    RowMatrix<T> scale1, shift1;  // 1 x C
    RowMatrix<T> scale2, shift2;  // 1 x C
};

template <class T>
struct Attention {
    Affine<T> query, key, value, output;  // C -> C each
};

/// Gate head: tanh(silu([F | F_A] W1 + b1) W2 + b2); W2 has one output
/// column (scalar gate per pixel) or C columns (per-channel gate).
template <class T>
struct Gate {
    Affine<T> hidden;  // 2C -> C
    Affine<T> out;     // C -> 1 or C
};

/// Concatenation fusion: h = [F | G] Win + bin; out = h + silu(h) Wh + bh.
template <class T>
struct NaiveMlp {
    Affine<T> in;      // 2C -> C
    Affine<T> hidden;  // C -> C
};

struct FusionConfig {
    int channels = 8;
    int refine_blocks = 4;
    int heads = 1;
    bool per_channel_gate = false;
    /// Encoder level channel counts for multi-scale aggregation (may be empty).
    std::vector<int> level_channels;

    bool operator==(const FusionConfig&) const = default;
};

/// Every learnable tensor of the adapter. Gradients use the same type.
template <class T>
struct FusionParams {
    FusionConfig config;
    std::vector<ConvBlock<T>> refine;
    Affine<T> proj;
    Attention<T> attn;
    Gate<T> gate;
    NaiveMlp<T> naive;
    std::vector<Affine<T>> level_in;   // C_l -> C
    std::vector<Affine<T>> level_out;  // C -> C_l

    /// All tensors zero (refine blocks become identity, gate outputs 0).
    static FusionParams zeros(const FusionConfig& cfg);
    /// Small seeded random weights; norm scales 1, shifts 0. Deterministic in seed.
    static FusionParams random(const FusionConfig& cfg, std::uint64_t seed, T weight_scale = T(0.2));

    /// Visits (name, tensor) pairs in a fixed order.
    template <class Fn>
    void for_each(Fn&& fn);
    template <class Fn>
    void for_each(Fn&& fn) const;

    std::size_t parameter_count() const;
    /// this += step * other, tensorwise.
    void axpy(T step, const FusionParams& other);
    bool all_finite() const;

    template <class U>
    FusionParams<U> cast() const;
};

/// Writes `dir/manifest.json` plus one FTC1 file per tensor. The manifest
/// lists name, file, shape and dtype of each tensor along with the config.
template <class T>
void save_params(const FusionParams<T>& params, const std::filesystem::path& dir);

/// Loads a bundle written by save_params, converting payloads to T.
/// Throws ValidationError when the manifest and tensor files disagree.
template <class T>
FusionParams<T> load_params(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------

template <class T>
template <class Fn>
void FusionParams<T>::for_each(Fn&& fn) {
    auto affine = [&](const std::string& name, Affine<T>& a) {
        fn(name + ".weight", a.weight);
        fn(name + ".bias", a.bias);
    };
    for (std::size_t b = 0; b < refine.size(); ++b) {
        const std::string p = "refine." + std::to_string(b);
        fn(p + ".conv1", refine[b].conv1);
        fn(p + ".scale1", refine[b].scale1);
        fn(p + ".shift1", refine[b].shift1);
        fn(p + ".conv2", refine[b].conv2);
        fn(p + ".scale2", refine[b].scale2);
        fn(p + ".shift2", refine[b].shift2);
    }
    affine("proj", proj);
    affine("attn.query", attn.query);
    affine("attn.key", attn.key);
    affine("attn.value", attn.value);
    affine("attn.output", attn.output);
    affine("gate.hidden", gate.hidden);
    affine("gate.out", gate.out);
    affine("naive.in", naive.in);
    affine("naive.hidden", naive.hidden);
    for (std::size_t l = 0; l < level_in.size(); ++l) affine("level_in." + std::to_string(l), level_in[l]);
    for (std::size_t l = 0; l < level_out.size(); ++l) affine("level_out." + std::to_string(l), level_out[l]);
}

template <class T>
template <class Fn>
void FusionParams<T>::for_each(Fn&& fn) const {
    const_cast<FusionParams*>(this)->for_each(
        [&](const std::string& name, RowMatrix<T>& m) { fn(name, static_cast<const RowMatrix<T>&>(m)); });
}

}  // namespace splatfeat::adapter
