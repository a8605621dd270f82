#pragma once

#include <vector>

#include "splatfeat/adapter/params.hpp"
#include "splatfeat/feature_map.hpp"

namespace splatfeat::adapter {

/// Intermediate activations of one refinement pass, needed by the backward pass.
template <class T>
struct RefineTape {
    int height = 0, width = 0;
    struct Block {
        RowMatrix<T> input;   // HW x C
        RowMatrix<T> cols1;   // HW x 9C
        RowMatrix<T> conv1;   // raw conv1 output
        RowMatrix<T> pre1;    // normalized conv1 output, before silu
        RowMatrix<T> cols2;   // HW x 9C of silu(pre1)
        RowMatrix<T> conv2;   // raw conv2 output
    };
    std::vector<Block> blocks;
};

/// Lightweight residual refinement network applied to a H x W x C map.
/// All-zero block weights make it an exact identity.
template <class T>
FeatureMap<T> refine(const FeatureMap<T>& input, const FusionParams<T>& params,
                     RefineTape<T>* tape = nullptr);

/// Backpropagates dL/d(output) through the recorded pass. Adds refine
/// parameter gradients to `grad` (may be null) and returns dL/d(input).
template <class T>
RowMatrix<T> refine_backward(const RefineTape<T>& tape, const FusionParams<T>& params,
                             const RowMatrix<T>& d_output, FusionParams<T>* grad);

/// Zero-padded 3x3 patch matrix: row p holds the 9 neighbours of pixel p,
/// each contributing C columns at offset (ky * 3 + kx) * C.
template <class T>
RowMatrix<T> im2col3x3(const RowMatrix<T>& x, int height, int width);

/// Adjoint of im2col3x3.
template <class T>
RowMatrix<T> col2im3x3(const RowMatrix<T>& cols, int height, int width, int channels);

}  // namespace splatfeat::adapter
