#include "splatfeat/adapter/trainer.hpp"

#include <cmath>
#include <string>

#include "splatfeat/adapter/feature_loss.hpp"
#include "splatfeat/adapter/fusion.hpp"
#include "splatfeat/adapter/refine.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/synthetic.hpp"
#include "splatfeat/uplift.hpp"

namespace splatfeat::adapter {

namespace {

constexpr int kToyChannels = 8;
constexpr int kToySize = 8;

// Rendered ground truth with a constant feature filling the uncovered
// part of every pixel, so no pixel vector is zero.
FeatureMap<double> dense_truth(const GaussianScene& scene, const CameraView& view,
                               const Eigen::RowVectorXd& background) {
    auto r = rasterize_features<double>(scene, view);
    FeatureMap<double> out = std::move(r.features);
    out.view_id = view.id;
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
        const double rest = 1.0 - r.contributions.accumulated_alpha[p];
        auto px = out.pixel(p);
        for (int c = 0; c < out.channels; ++c) px[c] += rest * background[c];
    }
    return out;
}

}  // namespace

ToyTask make_toy_task(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Gaussian> gs;
    const Eigen::Vector3f centers[3] = {{0.25f, 0.3f, 0.5f}, {0.75f, 0.35f, 0.45f}, {0.5f, 0.75f, 0.55f}};
    for (const auto& c : centers) gs.push_back(random_gaussian(rng, c, 0.12, 0.2, 0.85, 0.95));
    ToyTask task;
    task.scene = GaussianScene(std::move(gs)).with_features(random_unit_rows(rng, 3, kToyChannels));
    const RowMatrix<double> bg = random_unit_rows(rng, 1, kToyChannels);
    const RowMatrix<double> shift = random_unit_rows(rng, 1, kToyChannels);

    auto cams = ring_cameras(8, kToySize, kToySize, 2.0, Eigen::Vector3d(0.5, 0.5, 0.5), 0.2);
    for (auto& cam : cams) cam.fx = cam.fy = 0.9 * kToySize;
    task.reference_views = {cams[0]};
    task.target_views = {cams[1]};
    for (const auto& v : task.reference_views)
        task.reference_features.push_back(dense_truth(task.scene, v, bg.row(0)));
    for (const auto& v : task.target_views) {
        FeatureMap<double> gt = dense_truth(task.scene, v, bg.row(0));
        FeatureMap<double> degraded = gt;
        for (std::size_t p = 0; p < degraded.pixel_count(); ++p) {
            auto px = degraded.pixel(p);
            for (int c = 0; c < degraded.channels; ++c) px[c] = 0.8 * px[c] + 0.4 * shift(0, c);
        }
        task.target_features.push_back(std::move(degraded));
        task.target_truth.push_back(std::move(gt));
    }
    // The model only sees geometry: strip the ground truth from the scene.
    task.scene = task.scene.without_features();
    return task;
}

ToyInputs prepare_toy_inputs(const ToyTask& task, const PEConfig& pe) {
    if (task.reference_views.size() != task.reference_features.size() ||
        task.target_views.size() != task.target_features.size() ||
        task.target_views.size() != task.target_truth.size())
        throw PreconditionError("toy task: view and feature counts differ");
    std::vector<ContributionMap> contribs;
    for (const auto& v : task.reference_views) contribs.push_back(rasterize_weights(task.scene, v));
    const RowMatrix<double> lifted =
        lift<double>(task.reference_features, contribs, task.scene.size(), LiftConfig{});
    const GaussianScene with = attach_features(task.scene, lifted);
    ToyInputs in;
    auto encode = [&](const CameraView& v) {
        auto r = rasterize_features<double>(with, v);
        return gs_pe(r.features, r.dominant, with, pe);
    };
    for (const auto& v : task.reference_views) in.reference.push_back(encode(v));
    for (const auto& v : task.target_views) in.target.push_back(encode(v));
    return in;
}

ToyObjective toy_objective(const ToyTask& task, const ToyInputs& inputs,
                           const FusionParams<double>& params, double feature_weight,
                           FusionParams<double>* grad) {
    ToyObjective obj;

    std::size_t count = 0;
    for (const auto& t : task.target_truth) count += t.data.size();
    double sq = 0;
    for (std::size_t v = 0; v < task.target_views.size(); ++v) {
        RefineTape<double> rtape;
        const FeatureMap<double> refined = refine(inputs.target[v], params, &rtape);
        const FeatureMap<double> projected = project_features(refined, params);
        FusionTape<double> ftape;
        const auto fused = adaptive_fuse(task.target_features[v], projected, params, {}, &ftape);
        const RowMatrix<double> diff = fused.fused.tokens() - task.target_truth[v].tokens();
        sq += diff.squaredNorm();
        if (grad) {
            const RowMatrix<double> d_out = diff * (2.0 / static_cast<double>(count));
            const auto [d_query, d_geom] = adaptive_fuse_backward(ftape, params, d_out, grad);
            const RowMatrix<double> d_refined = project_backward(refined, params, d_geom, grad);
            refine_backward(rtape, params, d_refined, grad);
        }
    }
    obj.surrogate = sq / static_cast<double>(count);

    std::vector<RefineTape<double>> tapes(task.reference_views.size());
    std::vector<FeatureMap<double>> refined_refs;
    for (std::size_t v = 0; v < task.reference_views.size(); ++v)
        refined_refs.push_back(refine(inputs.reference[v], params, &tapes[v]));
    const auto fl = feature_loss<double>(refined_refs, task.reference_features);
    obj.feature = fl.value;
    if (grad) {
        for (std::size_t v = 0; v < refined_refs.size(); ++v)
            refine_backward(tapes[v], params, RowMatrix<double>(fl.gradient[v].tokens() * feature_weight),
                            grad);
    }
    obj.total = obj.surrogate + feature_weight * obj.feature;
    return obj;
}

TrainResult toy_train(const ToyTask& task, FusionParams<double> params, const TrainConfig& cfg) {
    if (cfg.steps < 0) throw PreconditionError("toy_train: negative step count");
    const ToyInputs inputs = prepare_toy_inputs(task);
    TrainResult result;
    result.curve.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    for (int step = 0;; ++step) {
        FusionParams<double> grad = FusionParams<double>::zeros(params.config);
        const bool last = step == cfg.steps;
        const ToyObjective obj = toy_objective(task, inputs, params, cfg.feature_weight, last ? nullptr : &grad);
        if (!std::isfinite(obj.total))
            throw Error("toy_train: objective diverged at step " + std::to_string(step));
        result.curve.push_back(obj);
        if (last) break;
        params.axpy(-cfg.learning_rate, grad);
        if (!params.all_finite())
            throw Error("toy_train: parameters became non-finite at step " + std::to_string(step));
    }
    result.params = std::move(params);
    return result;
}

}  // namespace splatfeat::adapter
