
#include <optional>

#include "commands.hpp"
#include "splatfeat/adapter/fusion.hpp"
#include "splatfeat/adapter/params.hpp"
#include "splatfeat/adapter/positional_encoding.hpp"
#include "splatfeat/adapter/refine.hpp"
#include "splatfeat/dataprep/voxel_prune.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/ply.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/synthetic.hpp"
#include "splatfeat/tensor_io.hpp"
#include "splatfeat/uplift.hpp"

namespace splatfeat::cli {

namespace fs = std::filesystem;
using adapter::FusionConfig;
using adapter::FusionParams;

namespace {

struct SynthOpts {
    SynthConfig cfg;
    bool isolated = false;
    int cell = 12;
};

int run_synth(const SynthOpts& o, const Common& c, std::ostream& out) {
    RunManifest m("synth", c);
    SynthConfig cfg = o.cfg;
    cfg.seed = c.seed;
    const SynthScene s = o.isolated ? make_isolated(cfg.width, cfg.height, o.cell, cfg.channels, c.seed)
                                    : make_synthetic(cfg);
    m.config() = {{"gaussians", s.scene.size()}, {"views", s.cameras.size()},   {"channels", cfg.channels},
                  {"width", cfg.width},          {"height", cfg.height},        {"isolated", o.isolated},
                  {"min_scale", cfg.min_scale},  {"max_scale", cfg.max_scale}, {"ring_radius", cfg.ring_radius}};

    const fs::path ply = c.out / "scene.ply", cams = c.out / "cameras.json";
    save_ply(s.scene, ply);
    save_cameras(cams, s.cameras);
    m.output("scene", ply);
    m.output("scene_features", feature_sidecar_path(ply));
    m.output("cameras", cams);

    const fs::path feats = c.out / "features.ftc";
    if (c.precision == "f64") {
        write_stack(feats, s.feature_maps);
    } else {
        std::vector<FeatureMapF> f;
        for (const auto& fm : s.feature_maps) f.push_back(fm.cast<float>());
        write_stack(feats, f);
    }
    m.output("features", feats);

    std::vector<FeatureMapF> images;
    for (const auto& cam : s.cameras) images.push_back(rasterize_color(s.scene, cam).image);
    write_stack(c.out / "images.ftc", images);
    m.output("images", c.out / "images.ftc");

    std::vector<double> centers;
    for (const auto& g : s.scene.gaussians())
        for (int a = 0; a < 3; ++a) centers.push_back(g.position[a]);
    write_tensor(c.out / "points.ftc", Tensor({s.scene.size(), 3}, centers));
    m.output("points", c.out / "points.ftc");

    m.finish();
    out << "synth: " << s.scene.size() << " Gaussians, " << s.cameras.size() << " views -> " << c.out.string()
        << '\n';
    return kExitOk;
}

struct RenderOpts {
    fs::path scene, cameras;
    std::string views;
    int downsample = 1;
    bool normalize = false;
    bool view_dependent = false;
};

template <class T>
int run_render(const RenderOpts& o, const Common& c, std::ostream& out) {
    require_file("--scene", o.scene);
    require_file("--cameras", o.cameras);
    if (o.downsample < 1) throw ValidationError("--downsample: must be at least 1");
    RunManifest m("render", c);
    m.input("scene", o.scene);
    m.input("cameras", o.cameras);
    const GaussianScene scene = load_ply(o.scene);
    const auto views = select_views(load_cameras(o.cameras), o.views);
    RasterConfig rc;
    rc.threads = c.threads;
    rc.normalize_features = o.normalize;
    rc.view_dependent_color = o.view_dependent;
    m.config() = {{"views", views.size()}, {"downsample", o.downsample}, {"normalize_features", o.normalize},
                  {"view_dependent_color", o.view_dependent}};

    std::vector<FeatureMapF> images;
    std::vector<FeatureMap<T>> features;
    std::vector<FeatureMapD> dominant;
    for (const auto& full : views) {
        const CameraView cam = o.downsample > 1 ? full.downsampled(o.downsample) : full;
        images.push_back(rasterize_color(scene, cam, rc).image);
        DominantMap dm;
        if (scene.has_features()) {
            auto r = rasterize_features<T>(scene, cam, rc);
            r.features.view_id = cam.id;
            r.features.downsample = o.downsample;
            features.push_back(std::move(r.features));
            dm = std::move(r.dominant);
        } else {
            dm = dominant_from(rasterize_weights(scene, cam, rc));
        }
        FeatureMapD d(cam.height, cam.width, 2);
        for (std::size_t p = 0; p < d.pixel_count(); ++p) {
            d.data[2 * p] = dm.ids[p] == kNoGaussian ? -1.0 : static_cast<double>(dm.ids[p]);
            d.data[2 * p + 1] = dm.weights[p];
        }
        dominant.push_back(std::move(d));
    }
    write_stack(c.out / "images.ftc", images);
    m.output("images", c.out / "images.ftc");
    write_stack(c.out / "dominant.ftc", dominant);
    m.output("dominant", c.out / "dominant.ftc");
    if (!features.empty()) {
        write_stack(c.out / "rendered_features.ftc", features);
        m.output("features", c.out / "rendered_features.ftc");
    }
    m.finish();
    out << "render: " << views.size() << " views" << (features.empty() ? " (color only)" : "") << '\n';
    return kExitOk;
}

struct LiftOpts {
    fs::path scene, cameras, features;
    std::string views;
    int top_k = LiftConfig::kAll;
    bool raw = false;
};

template <class T>
int run_lift(const LiftOpts& o, const Common& c, std::ostream& out) {
    require_file("--scene", o.scene);
    require_file("--cameras", o.cameras);
    require_file("--features", o.features);
    RunManifest m("lift", c);
    m.input("scene", o.scene);
    m.input("cameras", o.cameras);
    m.input("features", o.features);
    const GaussianScene scene = load_ply(o.scene);
    const auto views = select_views(load_cameras(o.cameras), o.views);
    auto maps = tensor_to_stack<T>(read_tensor(o.features));
    if (maps.size() != views.size())
        throw ValidationError("--features: stack holds " + std::to_string(maps.size()) + " maps for " +
                              std::to_string(views.size()) + " views");
    RasterConfig rc;
    rc.threads = c.threads;
    std::vector<ContributionMap> contribs;
    for (std::size_t v = 0; v < views.size(); ++v) {
        const int n = latent_factor(views[v], maps[v].height, maps[v].width);
        maps[v].downsample = n;
        contribs.push_back(rasterize_weights(scene, n > 1 ? views[v].downsampled(n) : views[v], rc));
    }
    LiftConfig lc;
    lc.top_k = o.top_k;
    lc.normalize_output = !o.raw;
    lc.threads = c.threads;
    const RowMatrix<T> f = lift<T>(maps, contribs, scene.size(), lc);
    m.config() = {{"views", views.size()}, {"top_k", o.top_k == LiftConfig::kAll ? nlohmann::json("all")
                                                                                 : nlohmann::json(o.top_k)},
                  {"normalize_output", !o.raw}};

    std::vector<T> flat(f.data(), f.data() + f.size());
    write_tensor(c.out / "lifted.ftc", Tensor({static_cast<std::uint64_t>(f.rows()),
                                                static_cast<std::uint64_t>(f.cols())}, flat));
    m.output("lifted", c.out / "lifted.ftc");
    const fs::path ply = c.out / "lifted.ply";
    save_ply(attach_features(scene, f.template cast<double>()), ply);
    m.output("scene", ply);
    m.output("scene_features", feature_sidecar_path(ply));
    std::size_t empty = 0;
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        if (f.row(i).squaredNorm() == T(0)) ++empty;
    m.results() = {{"gaussians", scene.size()}, {"zero_rows", empty}};
    m.finish();
    out << "lift: " << scene.size() << " Gaussians, " << empty << " without observations\n";
    return kExitOk;
}

struct FuseOpts {
    fs::path scene, cameras, targets, params, save_params;
    std::string views;
    std::string init = "zeros";
    int refine_blocks = 4;
    int heads = 1;
    bool per_channel_gate = false;
    bool naive = false;
    double omega0 = 10000.0;
    std::optional<double> gate_override;
};

template <class T>
int run_fuse(const FuseOpts& o, const Common& c, std::ostream& out) {
    require_file("--scene", o.scene);
    require_file("--cameras", o.cameras);
    require_file("--targets", o.targets);
    RunManifest m("fuse", c);
    m.input("scene", o.scene);
    m.input("cameras", o.cameras);
    m.input("targets", o.targets);
    const GaussianScene scene = load_ply(o.scene);
    if (!scene.has_features())
        throw ValidationError("--scene: " + o.scene.string() + " carries no per-Gaussian features");
    const auto views = select_views(load_cameras(o.cameras), o.views);
    const auto targets = tensor_to_stack<T>(read_tensor(o.targets));
    if (targets.size() != views.size())
        throw ValidationError("--targets: stack holds " + std::to_string(targets.size()) + " maps for " +
                              std::to_string(views.size()) + " views");
    const int channels = targets.empty() ? scene.feature_channels() : targets.front().channels;
    if (channels != scene.feature_channels())
        throw ValidationError("--targets: " + std::to_string(channels) + " channels but the scene carries " +
                              std::to_string(scene.feature_channels()));

    FusionParams<T> params;
    if (!o.params.empty()) {
        require_file("--params", o.params);
        m.input("params", o.params / "manifest.json");
        params = adapter::load_params<T>(o.params);
    } else {
        FusionConfig fc;
        fc.channels = channels;
        fc.refine_blocks = o.refine_blocks;
        fc.heads = o.heads;
        fc.per_channel_gate = o.per_channel_gate;
        params = o.init == "random" ? FusionParams<T>::random(fc, c.seed) : FusionParams<T>::zeros(fc);
    }
    if (params.config.channels != channels)
        throw ValidationError("--params: expects " + std::to_string(params.config.channels) +
                              " channels, features have " + std::to_string(channels));

    RasterConfig rc;
    rc.threads = c.threads;
    adapter::PEConfig pe{o.omega0};
    adapter::FusionOptions fo;
    fo.gate_override = o.gate_override;
    std::vector<FeatureMap<T>> fused, gates;
    for (std::size_t v = 0; v < views.size(); ++v) {
        const int n = latent_factor(views[v], targets[v].height, targets[v].width);
        const CameraView cam = n > 1 ? views[v].downsampled(n) : views[v];
        auto r = rasterize_features<T>(scene, cam, rc);
        const auto encoded = adapter::gs_pe(r.features, r.dominant, scene, pe);
        const auto geom = adapter::project_features(adapter::refine(encoded, params), params);
        if (o.naive) {
            fused.push_back(adapter::naive_fuse(targets[v], geom, params));
        } else {
            auto res = adapter::adaptive_fuse(targets[v], geom, params, fo);
            fused.push_back(std::move(res.fused));
            gates.push_back(std::move(res.gate));
        }
    }
    m.config() = {{"views", views.size()},
                  {"mode", o.naive ? "naive" : "adaptive"},
                  {"params", o.params.empty() ? nlohmann::json(o.init) : nlohmann::json(o.params.string())},
                  {"fusion", {{"channels", params.config.channels},
                              {"refine_blocks", params.config.refine_blocks},
                              {"heads", params.config.heads},
                              {"per_channel_gate", params.config.per_channel_gate}}},
                  {"omega0", o.omega0},
                  {"gate_override", o.gate_override ? nlohmann::json(*o.gate_override) : nlohmann::json()}};
    write_stack(c.out / "fused.ftc", fused);
    m.output("fused", c.out / "fused.ftc");
    if (!gates.empty()) {
        write_stack(c.out / "gate.ftc", gates);
        m.output("gate", c.out / "gate.ftc");
    }
    if (!o.save_params.empty()) {
        adapter::save_params(params, o.save_params);
        m.output("params", o.save_params / "manifest.json");
    }
    m.finish();
    out << "fuse: " << views.size() << " target views (" << (o.naive ? "naive" : "adaptive") << ")\n";
    return kExitOk;
}

struct PruneOpts {
    fs::path scene;
    double voxel_size = 0;
};

int run_prune(const PruneOpts& o, const Common& c, std::ostream& out) {
    require_file("--scene", o.scene);
    RunManifest m("prune", c);
    m.input("scene", o.scene);
    const GaussianScene scene = load_ply(o.scene);
    const auto r = prep::voxel_prune(scene, o.voxel_size);
    const fs::path ply = c.out / "pruned.ply";
    save_ply(r.scene, ply);
    m.output("scene", ply);
    if (r.scene.has_features()) m.output("scene_features", feature_sidecar_path(ply));
    m.config() = {{"voxel_size", o.voxel_size}};
    m.results() = {{"gaussians", scene.size()}, {"kept", r.kept.size()}, {"prune_rate", r.prune_rate}};
    m.finish();
    out << "prune: kept " << r.kept.size() << " of " << scene.size() << " (prune rate " << r.prune_rate << ")\n";
    return kExitOk;
}

template <template <class> class Fn, class Opts>
Runner by_precision(std::shared_ptr<Opts> o) {
    return [o](const Common& c, std::ostream& out) {
        return c.precision == "f64" ? Fn<double>::run(*o, c, out) : Fn<float>::run(*o, c, out);
    };
}

template <class T>
struct RenderFn {
    static int run(const RenderOpts& o, const Common& c, std::ostream& out) { return run_render<T>(o, c, out); }
};
template <class T>
struct LiftFn {
    static int run(const LiftOpts& o, const Common& c, std::ostream& out) { return run_lift<T>(o, c, out); }
};
template <class T>
struct FuseFn {
    static int run(const FuseOpts& o, const Common& c, std::ostream& out) { return run_fuse<T>(o, c, out); }
};

}  // namespace

void register_scene_commands(CLI::App& app, Registry& reg) {
    {
        auto o = std::make_shared<SynthOpts>();
        Entry& e = add_command(app, reg, "synth", "Generate a seeded synthetic scene, cameras and feature maps");
        e.app->add_option("--gaussians", o->cfg.gaussians, "Gaussian count")->capture_default_str();
        e.app->add_option("--views", o->cfg.views, "Camera count on the ring")->capture_default_str();
        e.app->add_option("--channels", o->cfg.channels, "Feature channels")->capture_default_str();
        e.app->add_option("--width", o->cfg.width, "Image width")->capture_default_str();
        e.app->add_option("--height", o->cfg.height, "Image height")->capture_default_str();
        e.app->add_option("--min-scale", o->cfg.min_scale, "Smallest Gaussian scale")->capture_default_str();
        e.app->add_option("--max-scale", o->cfg.max_scale, "Largest Gaussian scale")->capture_default_str();
        e.app->add_flag("--isolated", o->isolated, "One camera facing non-overlapping opaque Gaussians");
        e.app->add_option("--cell", o->cell, "Grid cell size in pixels for --isolated")->capture_default_str();
        e.run = [o](const Common& c, std::ostream& out) { return run_synth(*o, c, out); };
    }
    {
        auto o = std::make_shared<RenderOpts>();
        Entry& e = add_command(app, reg, "render", "Rasterize colors, features and dominant-Gaussian maps");
        e.app->add_option("--scene", o->scene, "Scene PLY")->required();
        e.app->add_option("--cameras", o->cameras, "Camera JSON")->required();
        e.app->add_option("--views", o->views, "Comma-separated camera ids (default: all)");
        e.app->add_option("--downsample", o->downsample, "Render at 1/n resolution")->capture_default_str();
        e.app->add_flag("--normalize-features", o->normalize, "Divide features by accumulated alpha");
        e.app->add_flag("--view-dependent", o->view_dependent, "Evaluate higher-order SH colors");
        e.run = by_precision<RenderFn>(o);
    }
    {
        auto o = std::make_shared<LiftOpts>();
        Entry& e = add_command(app, reg, "lift", "Lift per-view feature maps onto the Gaussians");
        e.app->add_option("--scene", o->scene, "Scene PLY")->required();
        e.app->add_option("--cameras", o->cameras, "Camera JSON")->required();
        e.app->add_option("--features", o->features, "FTC1 stack P x H x W x C, one map per view")->required();
        e.app->add_option("--views", o->views, "Comma-separated camera ids matching the stack");
        e.app->add_option("--top-k", o->top_k, "Contributors kept per pixel (0: all)")
            ->check(CLI::Range(0, 255))
            ->capture_default_str();
        e.app->add_flag("--raw", o->raw, "Skip the per-Gaussian unit normalization");
        e.run = by_precision<LiftFn>(o);
    }
    {
        auto o = std::make_shared<FuseOpts>();
        Entry& e = add_command(app, reg, "fuse", "GS-PE, refine, project and fuse geometry into target features");
        e.app->add_option("--scene", o->scene, "Scene PLY with per-Gaussian features")->required();
        e.app->add_option("--cameras", o->cameras, "Camera JSON")->required();
        e.app->add_option("--targets", o->targets, "FTC1 stack of target-view features")->required();
        e.app->add_option("--views", o->views, "Comma-separated target camera ids matching the stack");
        e.app->add_option("--params", o->params, "Fusion parameter bundle directory");
        e.app->add_option("--init", o->init, "Parameters when --params is absent")
            ->check(CLI::IsMember({"zeros", "random"}))
            ->capture_default_str();
        e.app->add_option("--refine-blocks", o->refine_blocks, "RefineNet depth for --init")->capture_default_str();
        e.app->add_option("--heads", o->heads, "Attention heads for --init")->capture_default_str();
        e.app->add_flag("--per-channel-gate", o->per_channel_gate, "One gate value per channel for --init");
        e.app->add_flag("--naive", o->naive, "Concatenation fusion instead of gated cross-attention");
        e.app->add_option("--omega0", o->omega0, "GS-PE base frequency")->capture_default_str();
        e.app->add_option("--gate", o->gate_override, "Force the gate to this value");
        e.app->add_option("--save-params", o->save_params, "Write the parameters used to this directory");
        e.run = by_precision<FuseFn>(o);
    }
    {
        auto o = std::make_shared<PruneOpts>();
        Entry& e = add_command(app, reg, "prune", "Keep the most opaque Gaussian per voxel");
        e.app->add_option("--scene", o->scene, "Scene PLY")->required();
        e.app->add_option("--voxel-size", o->voxel_size, "Voxel edge length")->required()->check(
            CLI::PositiveNumber);
        e.run = [o](const Common& c, std::ostream& out) { return run_prune(*o, c, out); };
    }
}

}  // namespace splatfeat::cli
