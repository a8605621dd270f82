#include "splatfeat/adapter/refine.hpp"

#include <string>

#include "layers.hpp"
#include "splatfeat/error.hpp"

namespace splatfeat::adapter {

template <class T>
RowMatrix<T> im2col3x3(const RowMatrix<T>& x, int height, int width) {
    const Eigen::Index c = x.cols();
    RowMatrix<T> cols = RowMatrix<T>::Zero(x.rows(), 9 * c);
    for (int y = 0; y < height; ++y)
        for (int xx = 0; xx < width; ++xx) {
            const Eigen::Index p = static_cast<Eigen::Index>(y) * width + xx;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= height) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = xx + kx - 1;
                    if (sx < 0 || sx >= width) continue;
                    cols.block(p, (ky * 3 + kx) * c, 1, c) =
                        x.row(static_cast<Eigen::Index>(sy) * width + sx);
                }
            }
        }
    return cols;
}

template <class T>
RowMatrix<T> col2im3x3(const RowMatrix<T>& cols, int height, int width, int channels) {
    RowMatrix<T> x = RowMatrix<T>::Zero(cols.rows(), channels);
    for (int y = 0; y < height; ++y)
        for (int xx = 0; xx < width; ++xx) {
            const Eigen::Index p = static_cast<Eigen::Index>(y) * width + xx;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= height) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = xx + kx - 1;
                    if (sx < 0 || sx >= width) continue;
                    x.row(static_cast<Eigen::Index>(sy) * width + sx) +=
                        cols.block(p, (ky * 3 + kx) * channels, 1, channels);
                }
            }
        }
    return x;
}

template <class T>
FeatureMap<T> refine(const FeatureMap<T>& input, const FusionParams<T>& params, RefineTape<T>* tape) {
    if (input.channels != params.config.channels)
        throw PreconditionError("refine: input has " + std::to_string(input.channels) +
                                " channels, params expect " + std::to_string(params.config.channels));
    const int h = input.height, w = input.width;
    RowMatrix<T> x = input.tokens();
    if (tape) {
        tape->height = h;
        tape->width = w;
        tape->blocks.clear();
    }
    for (const auto& blk : params.refine) {
        typename RefineTape<T>::Block rec;
        rec.input = x;
        rec.cols1 = im2col3x3(x, h, w);
        rec.conv1 = rec.cols1 * blk.conv1;
        rec.pre1 = (rec.conv1.array().rowwise() * blk.scale1.array().row(0)).rowwise() +
                   blk.shift1.array().row(0);
        rec.cols2 = im2col3x3(detail::silu(rec.pre1), h, w);
        rec.conv2 = rec.cols2 * blk.conv2;
        x.array() += (rec.conv2.array().rowwise() * blk.scale2.array().row(0)).rowwise() +
                     blk.shift2.array().row(0);
        if (tape) tape->blocks.push_back(std::move(rec));
    }
    FeatureMap<T> out = input;
    out.tokens() = x;
    return out;
}

template <class T>
RowMatrix<T> refine_backward(const RefineTape<T>& tape, const FusionParams<T>& params,
                             const RowMatrix<T>& d_output, FusionParams<T>* grad) {
    const int c = params.config.channels;
    RowMatrix<T> dx = d_output;
    for (std::size_t b = tape.blocks.size(); b-- > 0;) {
        const auto& rec = tape.blocks[b];
        const auto& blk = params.refine[b];
        // residual branch
        const RowMatrix<T> dh2 = (dx.array().rowwise() * blk.scale2.array().row(0)).matrix();
        const RowMatrix<T> dcols2 = dh2 * blk.conv2.transpose();
        const RowMatrix<T> da1 = col2im3x3(dcols2, tape.height, tape.width, c);
        const RowMatrix<T> dpre1 = (da1.array() * detail::silu_grad(rec.pre1).array()).matrix();
        const RowMatrix<T> dh1 = (dpre1.array().rowwise() * blk.scale1.array().row(0)).matrix();
        if (grad) {
            auto& g = grad->refine[b];
            g.scale2 += (dx.array() * rec.conv2.array()).colwise().sum().matrix();
            g.shift2 += dx.colwise().sum();
            g.conv2.noalias() += rec.cols2.transpose() * dh2;
            g.scale1 += (dpre1.array() * rec.conv1.array()).colwise().sum().matrix();
            g.shift1 += dpre1.colwise().sum();
            g.conv1.noalias() += rec.cols1.transpose() * dh1;
        }
        dx += col2im3x3(RowMatrix<T>(dh1 * blk.conv1.transpose()), tape.height, tape.width, c);
    }
    return dx;
}

template RowMatrix<float> im2col3x3<float>(const RowMatrix<float>&, int, int);
template RowMatrix<double> im2col3x3<double>(const RowMatrix<double>&, int, int);
template RowMatrix<float> col2im3x3<float>(const RowMatrix<float>&, int, int, int);
template RowMatrix<double> col2im3x3<double>(const RowMatrix<double>&, int, int, int);
template FeatureMap<float> refine<float>(const FeatureMap<float>&, const FusionParams<float>&,
                                         RefineTape<float>*);
template FeatureMap<double> refine<double>(const FeatureMap<double>&, const FusionParams<double>&,
                                           RefineTape<double>*);
template RowMatrix<float> refine_backward<float>(const RefineTape<float>&, const FusionParams<float>&,
                                                 const RowMatrix<float>&, FusionParams<float>*);
template RowMatrix<double> refine_backward<double>(const RefineTape<double>&,
                                                   const FusionParams<double>&,
                                                   const RowMatrix<double>&, FusionParams<double>*);

}  // namespace splatfeat::adapter
