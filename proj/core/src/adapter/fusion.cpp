#include "splatfeat/adapter/fusion.hpp"

#include <cmath>
#include <string>

#include "layers.hpp"
#include "splatfeat/error.hpp"

namespace splatfeat::adapter {

using detail::affine_backward;
using detail::affine_forward;

namespace {

template <class T>
void check_channels(const char* op, int got, const FusionParams<T>& params) {
    if (got != params.config.channels)
        throw PreconditionError(std::string(op) + ": input has " + std::to_string(got) +
                                " channels, params expect " + std::to_string(params.config.channels));
}

template <class T>
void check_pair(const char* op, const FeatureMap<T>& a, const FeatureMap<T>& b) {
    if (a.pixel_count() != b.pixel_count())
        throw PreconditionError(std::string(op) + ": token count mismatch (" +
                                std::to_string(a.pixel_count()) + " vs " +
                                std::to_string(b.pixel_count()) + ")");
    if (a.channels != b.channels)
        throw PreconditionError(std::string(op) + ": channel mismatch");
}

template <class T>
FeatureMap<T> like(const FeatureMap<T>& shape, const RowMatrix<T>& tokens) {
    FeatureMap<T> out(shape.height, shape.width, static_cast<int>(tokens.cols()));
    out.view_id = shape.view_id;
    out.downsample = shape.downsample;
    out.tokens() = tokens;
    return out;
}

}  // namespace

template <class T>
FeatureMap<T> project_features(const FeatureMap<T>& refined, const FusionParams<T>& params) {
    check_channels("project", refined.channels, params);
    return like(refined, affine_forward<T>(refined.tokens(), params.proj));
}

template <class T>
RowMatrix<T> project_backward(const FeatureMap<T>& refined, const FusionParams<T>& params,
                              const RowMatrix<T>& d_output, FusionParams<T>* grad) {
    return affine_backward<T>(refined.tokens(), params.proj, d_output, grad ? &grad->proj : nullptr);
}

template <class T>
FeatureMap<T> naive_fuse(const FeatureMap<T>& target, const FeatureMap<T>& geometry,
                         const FusionParams<T>& params) {
    check_pair("naive_fuse", target, geometry);
    check_channels("naive_fuse", target.channels, params);
    const RowMatrix<T> x = detail::hconcat<T>(target.tokens(), geometry.tokens());
    const RowMatrix<T> h = affine_forward(x, params.naive.in);
    RowMatrix<T> out = h + affine_forward(detail::silu(h), params.naive.hidden);
    return like(target, out);
}

template <class T>
std::pair<RowMatrix<T>, RowMatrix<T>> naive_fuse_backward(const FeatureMap<T>& target,
                                                          const FeatureMap<T>& geometry,
                                                          const FusionParams<T>& params,
                                                          const RowMatrix<T>& d_output,
                                                          FusionParams<T>* grad) {
    const Eigen::Index c = target.channels;
    const RowMatrix<T> x = detail::hconcat<T>(target.tokens(), geometry.tokens());
    const RowMatrix<T> h = affine_forward(x, params.naive.in);
    const RowMatrix<T> du = affine_backward(detail::silu(h), params.naive.hidden, d_output,
                                            grad ? &grad->naive.hidden : nullptr);
    const RowMatrix<T> dh = d_output + RowMatrix<T>(du.array() * detail::silu_grad(h).array());
    const RowMatrix<T> dx = affine_backward(x, params.naive.in, dh, grad ? &grad->naive.in : nullptr);
    return {dx.leftCols(c), dx.rightCols(c)};
}

template <class T>
FusionResult<T> adaptive_fuse(const FeatureMap<T>& target, const FeatureMap<T>& geometry,
                              const FusionParams<T>& params, const FusionOptions& opts,
                              FusionTape<T>* tape) {
    check_pair("adaptive_fuse", target, geometry);
    check_channels("adaptive_fuse", target.channels, params);
    const int c = params.config.channels;
    const int heads = params.config.heads;
    const int dh = c / heads;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));

    FusionTape<T> local;
    FusionTape<T>& t = tape ? *tape : local;
    t.query_in = target.tokens();
    t.kv_in = geometry.tokens();
    t.q = affine_forward(t.query_in, params.attn.query);
    t.k = affine_forward(t.kv_in, params.attn.key);
    t.v = affine_forward(t.kv_in, params.attn.value);
    t.attn.assign(static_cast<std::size_t>(heads), RowMatrix<T>());
    t.heads.resize(t.q.rows(), c);
    for (int hd = 0; hd < heads; ++hd) {
        RowMatrix<T> s = (t.q.middleCols(hd * dh, dh) * t.k.middleCols(hd * dh, dh).transpose()) * inv_sqrt;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            const T mx = s.row(r).maxCoeff();
            s.row(r) = (s.row(r).array() - mx).exp().matrix();
            s.row(r) /= s.row(r).sum();
        }
        t.heads.middleCols(hd * dh, dh) = s * t.v.middleCols(hd * dh, dh);
        t.attn[hd] = std::move(s);
    }
    t.attended = affine_forward(t.heads, params.attn.output);

    t.gate_in = detail::hconcat(t.query_in, t.attended);
    t.gate_pre = affine_forward(t.gate_in, params.gate.hidden);
    t.gate_hidden = detail::silu(t.gate_pre);
    t.gate_forced = opts.gate_override.has_value();
    if (t.gate_forced) {
        t.gate = RowMatrix<T>::Constant(t.q.rows(), params.gate.out.out(),
                                        static_cast<T>(*opts.gate_override));
    } else {
        t.gate = affine_forward(t.gate_hidden, params.gate.out).unaryExpr([](T v) { return std::tanh(v); });
    }

    RowMatrix<T> fused = t.query_in;
    const bool scalar_gate = t.gate.cols() == 1;
    for (Eigen::Index r = 0; r < fused.rows(); ++r) {
        for (int ch = 0; ch < c; ++ch) {
            const T w = t.gate(r, scalar_gate ? 0 : ch);
            if (w != T(0)) fused(r, ch) += w * t.attended(r, ch);
        }
    }
    FusionResult<T> result{like(target, fused), like(target, t.gate)};
    return result;
}

template <class T>
std::pair<RowMatrix<T>, RowMatrix<T>> adaptive_fuse_backward(const FusionTape<T>& t,
                                                             const FusionParams<T>& params,
                                                             const RowMatrix<T>& d_output,
                                                             FusionParams<T>* grad) {
    const int c = params.config.channels;
    const int heads = params.config.heads;
    const int dh = c / heads;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
    const bool scalar_gate = t.gate.cols() == 1;

    RowMatrix<T> d_query = d_output;  // residual path
    RowMatrix<T> d_attended(d_output.rows(), c);
    RowMatrix<T> d_gate(t.gate.rows(), t.gate.cols());
    if (scalar_gate) {
        d_attended = (d_output.array().colwise() * t.gate.col(0).array()).matrix();
        d_gate.col(0) = (d_output.array() * t.attended.array()).rowwise().sum().matrix();
    } else {
        d_attended = (d_output.array() * t.gate.array()).matrix();
        d_gate = (d_output.array() * t.attended.array()).matrix();
    }

    if (!t.gate_forced) {
        const RowMatrix<T> d_gate_pre_out = (d_gate.array() * (T(1) - t.gate.array().square())).matrix();
        const RowMatrix<T> d_hidden = affine_backward(t.gate_hidden, params.gate.out, d_gate_pre_out,
                                                      grad ? &grad->gate.out : nullptr);
        const RowMatrix<T> d_pre = (d_hidden.array() * detail::silu_grad(t.gate_pre).array()).matrix();
        const RowMatrix<T> d_gate_in =
            affine_backward(t.gate_in, params.gate.hidden, d_pre, grad ? &grad->gate.hidden : nullptr);
        d_query += d_gate_in.leftCols(c);
        d_attended += d_gate_in.rightCols(c);
    }

    const RowMatrix<T> d_heads =
        affine_backward(t.heads, params.attn.output, d_attended, grad ? &grad->attn.output : nullptr);
    RowMatrix<T> dq(t.q.rows(), c), dk(t.k.rows(), c), dv(t.v.rows(), c);
    for (int hd = 0; hd < heads; ++hd) {
        const RowMatrix<T>& a = t.attn[hd];
        const RowMatrix<T> d_o = d_heads.middleCols(hd * dh, dh);
        const RowMatrix<T> d_a = d_o * t.v.middleCols(hd * dh, dh).transpose();
        dv.middleCols(hd * dh, dh) = a.transpose() * d_o;
        const Eigen::Matrix<T, Eigen::Dynamic, 1> row_dot = (d_a.array() * a.array()).rowwise().sum();
        const RowMatrix<T> d_s = (a.array() * (d_a.array().colwise() - row_dot.array())).matrix();
        dq.middleCols(hd * dh, dh) = d_s * t.k.middleCols(hd * dh, dh) * inv_sqrt;
        dk.middleCols(hd * dh, dh) = d_s.transpose() * t.q.middleCols(hd * dh, dh) * inv_sqrt;
    }
    d_query += affine_backward(t.query_in, params.attn.query, dq, grad ? &grad->attn.query : nullptr);
    RowMatrix<T> d_kv = affine_backward(t.kv_in, params.attn.key, dk, grad ? &grad->attn.key : nullptr);
    d_kv += affine_backward(t.kv_in, params.attn.value, dv, grad ? &grad->attn.value : nullptr);
    return {d_query, d_kv};
}

#define SPLATFEAT_INSTANTIATE(T)                                                                   \
    template FeatureMap<T> project_features<T>(const FeatureMap<T>&, const FusionParams<T>&);      \
    template RowMatrix<T> project_backward<T>(const FeatureMap<T>&, const FusionParams<T>&,        \
                                              const RowMatrix<T>&, FusionParams<T>*);              \
    template FeatureMap<T> naive_fuse<T>(const FeatureMap<T>&, const FeatureMap<T>&,               \
                                         const FusionParams<T>&);                                  \
    template std::pair<RowMatrix<T>, RowMatrix<T>> naive_fuse_backward<T>(                         \
        const FeatureMap<T>&, const FeatureMap<T>&, const FusionParams<T>&, const RowMatrix<T>&,   \
        FusionParams<T>*);                                                                         \
    template FusionResult<T> adaptive_fuse<T>(const FeatureMap<T>&, const FeatureMap<T>&,          \
                                              const FusionParams<T>&, const FusionOptions&,        \
                                              FusionTape<T>*);                                     \
    template std::pair<RowMatrix<T>, RowMatrix<T>> adaptive_fuse_backward<T>(                      \
        const FusionTape<T>&, const FusionParams<T>&, const RowMatrix<T>&, FusionParams<T>*);

SPLATFEAT_INSTANTIATE(float)
SPLATFEAT_INSTANTIATE(double)

#undef SPLATFEAT_INSTANTIATE

}  // namespace splatfeat::adapter
