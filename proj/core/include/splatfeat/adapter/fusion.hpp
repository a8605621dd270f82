#pragma once

#include <optional>
#include <vector>

#include "splatfeat/adapter/params.hpp"
#include "splatfeat/feature_map.hpp"

namespace splatfeat::adapter {

/// Token-level activations of one adaptive fusion call.
template <class T>
struct FusionTape {
    RowMatrix<T> query_in, kv_in;     // F_tar, G~_tar
    RowMatrix<T> q, k, v;             // projected
    std::vector<RowMatrix<T>> attn;   // softmax matrix per head (T x T)
    RowMatrix<T> heads;               // concatenated head outputs
    RowMatrix<T> attended;            // F^A
    RowMatrix<T> gate_in;             // [F | F^A]
    RowMatrix<T> gate_pre;            // hidden pre-activation
    RowMatrix<T> gate_hidden;         // silu(gate_pre)
    RowMatrix<T> gate;                // W in [-1, 1], T x 1 or T x C
    bool gate_forced = false;
};

template <class T>
struct FusionResult {
    FeatureMap<T> fused;  // F^ = F + W * F^A
    FeatureMap<T> gate;   // W, H x W x 1 (or x C for per-channel gates)
};

struct FusionOptions {
    /// Forces W to a constant (bypassing the gate head) when set.
    std::optional<double> gate_override;
};

/// G~ = P(G^): per-pixel affine projection.
template <class T>
FeatureMap<T> project_features(const FeatureMap<T>& refined, const FusionParams<T>& params);
template <class T>
RowMatrix<T> project_backward(const FeatureMap<T>& refined, const FusionParams<T>& params,
                              const RowMatrix<T>& d_output, FusionParams<T>* grad);

/// Concatenation fusion: per-pixel two-layer perceptron over [F | G~].
template <class T>
FeatureMap<T> naive_fuse(const FeatureMap<T>& target, const FeatureMap<T>& geometry,
                         const FusionParams<T>& params);
/// Returns (dL/dF, dL/dG~) and accumulates parameter gradients.
template <class T>
std::pair<RowMatrix<T>, RowMatrix<T>> naive_fuse_backward(const FeatureMap<T>& target,
                                                          const FeatureMap<T>& geometry,
                                                          const FusionParams<T>& params,
                                                          const RowMatrix<T>& d_output,
                                                          FusionParams<T>* grad);

/// F^A = CrossAttn(F, G~) within one view (softmax over that view's key
/// tokens); W = tanh(MLP(F | F^A)); F^ = F + W * F^A. Where W is exactly
/// zero the output pixel is F itself.
template <class T>
FusionResult<T> adaptive_fuse(const FeatureMap<T>& target, const FeatureMap<T>& geometry,
                              const FusionParams<T>& params, const FusionOptions& opts = {},
                              FusionTape<T>* tape = nullptr);
template <class T>
std::pair<RowMatrix<T>, RowMatrix<T>> adaptive_fuse_backward(const FusionTape<T>& tape,
                                                             const FusionParams<T>& params,
                                                             const RowMatrix<T>& d_output,
                                                             FusionParams<T>* grad);

}  // namespace splatfeat::adapter
