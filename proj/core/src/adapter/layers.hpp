#pragma once

// Token-matrix building blocks shared by the adapter ops. Rows are tokens
// (pixels), columns are channels.

#include <cmath>

#include "splatfeat/adapter/params.hpp"

namespace splatfeat::adapter::detail {

template <class T>
RowMatrix<T> affine_forward(const RowMatrix<T>& x, const Affine<T>& a) {
    RowMatrix<T> y = x * a.weight;
    y.rowwise() += a.bias.row(0);
    return y;
}

/// Accumulates parameter gradients into `grad` and returns dL/dx.
template <class T>
RowMatrix<T> affine_backward(const RowMatrix<T>& x, const Affine<T>& a, const RowMatrix<T>& dy,
                             Affine<T>* grad) {
    if (grad) {
        grad->weight.noalias() += x.transpose() * dy;
        grad->bias += dy.colwise().sum();
    }
    return dy * a.weight.transpose();
}

template <class T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <class T>
RowMatrix<T> silu(const RowMatrix<T>& x) {
    return x.unaryExpr([](T v) { return v * sigmoid(v); });
}

template <class T>
RowMatrix<T> silu_grad(const RowMatrix<T>& x) {
    return x.unaryExpr([](T v) {
        const T s = sigmoid(v);
        return s * (T(1) + v * (T(1) - s));
    });
}

template <class T>
RowMatrix<T> hconcat(const RowMatrix<T>& a, const RowMatrix<T>& b) {
    RowMatrix<T> out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

}  // namespace splatfeat::adapter::detail
