#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "commands.hpp"
#include "splatfeat/dataprep/view_selection.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/geo_eval/chamfer.hpp"
#include "splatfeat/geo_eval/covis.hpp"
#include "splatfeat/geo_eval/image_metrics.hpp"
#include "splatfeat/geo_eval/trajectory.hpp"
#include "splatfeat/ply.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/tensor_io.hpp"

namespace splatfeat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<Eigen::Vector3d> read_points(const std::string& flag, const fs::path& path) {
    require_file(flag, path);
    const Tensor t = read_tensor(path);
    if (t.rank() != 2 || t.shape[1] != 3)
        throw ValidationError(flag + ": expected an N x 3 tensor in " + path.string());
    const auto v = t.as<double>();
    std::vector<Eigen::Vector3d> pts(t.shape[0]);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
    return pts;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

struct PoseOpts {
    fs::path gt, pred;
    double scene_scale = 1.0;
};

int run_pose(const PoseOpts& o, const Common& c, std::ostream& out) {
    require_file("--gt", o.gt);
    require_file("--pred", o.pred);
    RunManifest m("eval-pose", c);
    m.input("gt", o.gt);
    m.input("pred", o.pred);
    const auto gt = geo::Trajectory::from_cameras(load_cameras(o.gt));
    const auto pred = geo::Trajectory::from_cameras(load_cameras(o.pred));
    if (gt.size() != pred.size())
        throw ValidationError("--pred: " + std::to_string(pred.size()) + " frames, --gt has " +
                              std::to_string(gt.size()));
    gt.validate();
    pred.validate();
    const auto e = geo::pose_error(gt, pred, o.scene_scale);
    m.config() = {{"scene_scale", o.scene_scale}, {"frames", gt.size()}};
    m.results() = {{"T_err_cm", e.translation_cm}, {"R_err_deg", e.rotation_deg}};
    m.finish();
    out << "T_err_cm " << e.translation_cm << "\nR_err_deg " << e.rotation_deg << '\n';
    return kExitOk;
}

struct ChamferOpts {
    fs::path a, b;
};

int run_chamfer(const ChamferOpts& o, const Common& c, std::ostream& out) {
    const auto a = read_points("--a", o.a);
    const auto b = read_points("--b", o.b);
    if (a.empty() || b.empty()) throw ValidationError("eval-chamfer: point sets must be non-empty");
    RunManifest m("eval-chamfer", c);
    m.input("a", o.a);
    m.input("b", o.b);
    const double cd = geo::chamfer(a, b, c.threads);
    m.results() = {{"CD", cd}, {"points_a", a.size()}, {"points_b", b.size()}};
    m.finish();
    out << "CD " << cd << '\n';
    return kExitOk;
}

struct CovisOpts {
    fs::path points, cameras, depth, scene, pred, gt;
    std::string views;
    double tol = 0.05;
};

int run_covis(const CovisOpts& o, const Common& c, std::ostream& out) {
    const auto points = read_points("--points", o.points);
    require_file("--cameras", o.cameras);
    if (o.depth.empty() == o.scene.empty()) throw ValidationError("eval-covis: give exactly one of --depth, --scene");
    RunManifest m("eval-covis", c);
    m.input("points", o.points);
    m.input("cameras", o.cameras);
    const auto views = select_views(load_cameras(o.cameras), o.views);

    std::vector<FeatureMapD> depth;
    if (!o.depth.empty()) {
        require_file("--depth", o.depth);
        m.input("depth", o.depth);
        depth = tensor_to_stack<double>(read_tensor(o.depth));
    } else {
        require_file("--scene", o.scene);
        m.input("scene", o.scene);
        const GaussianScene scene = load_ply(o.scene);
        for (const auto& v : views) depth.push_back(render_depth_points(scene, v));
    }
    if (depth.size() != views.size())
        throw ValidationError("--depth: " + std::to_string(depth.size()) + " maps for " +
                              std::to_string(views.size()) + " views");

    std::vector<FeatureMapD> pred, gt;
    if (o.pred.empty() != o.gt.empty()) throw ValidationError("eval-covis: --pred and --gt go together");
    if (!o.pred.empty()) {
        require_file("--pred", o.pred);
        require_file("--gt", o.gt);
        m.input("pred", o.pred);
        m.input("gt", o.gt);
        pred = tensor_to_stack<double>(read_tensor(o.pred));
        gt = tensor_to_stack<double>(read_tensor(o.gt));
        if (pred.size() != views.size() || gt.size() != views.size())
            throw ValidationError("--pred/--gt: stacks must hold one image per view");
    }

    std::vector<FeatureMapD> masks;
    json per_view = json::array();
    for (std::size_t v = 0; v < views.size(); ++v) {
        const int n = latent_factor(views[v], depth[v].height, depth[v].width);
        const CameraView cam = n > 1 ? views[v].downsampled(n) : views[v];
        const auto mask = geo::covis_mask(points, cam, depth[v], o.tol);
        FeatureMapD mm(mask.height, mask.width, 1);
        for (std::size_t p = 0; p < mm.pixel_count(); ++p) mm.data[p] = mask.visible[p];
        masks.push_back(std::move(mm));
        json rec = {{"view", cam.id}, {"covisible_pixels", mask.count()}, {"pixels", mask.visible.size()}};
        if (!pred.empty()) {
            if (!pred[v].same_shape(gt[v]) || pred[v].height != mask.height || pred[v].width != mask.width)
                throw ValidationError("--pred/--gt: image " + std::to_string(v) + " does not match the depth grid");
            const auto region = [&](const geo::CovisMask& mk, const char* suffix) {
                if (mk.count() == 0) {
                    rec[std::string("PSNR_") + suffix] = nullptr;
                    rec[std::string("SSIM_") + suffix] = nullptr;
                    return;
                }
                const auto q = geo::masked_psnr_ssim(pred[v], gt[v], mk.visible);
                rec[std::string("PSNR_") + suffix] = finite_or_null(q.psnr);
                rec[std::string("SSIM_") + suffix] = finite_or_null(q.ssim);
            };
            region(mask, "V");
            region(mask.inverted(), "U");
        }
        per_view.push_back(std::move(rec));
    }
    write_stack(c.out / "masks.ftc", masks);
    m.output("masks", c.out / "masks.ftc");
    m.config() = {{"tol", o.tol}, {"depth_source", o.depth.empty() ? "scene" : "file"}};
    m.results() = {{"views", per_view}};
    m.finish();
    for (const auto& r : per_view) out << r.dump() << '\n';
    return kExitOk;
}

struct PrepOpts {
    fs::path cameras, embeddings;
    prep::ViewGroupConfig cfg;
};

int run_prep(const PrepOpts& o, const Common& c, std::ostream& out) {
    require_file("--cameras", o.cameras);
    if (std::find(std::begin(prep::kInputCounts), std::end(prep::kInputCounts), o.cfg.inputs) ==
        std::end(prep::kInputCounts))
        throw ValidationError("--inputs: must be one of 1, 3, 6, 9, 12");
    RunManifest m("prep-views", c);
    m.input("cameras", o.cameras);
    const auto cameras = load_cameras(o.cameras);

    std::vector<Eigen::VectorXd> table;
    if (!o.embeddings.empty()) {
        require_file("--embeddings", o.embeddings);
        m.input("embeddings", o.embeddings);
        const Tensor t = read_tensor(o.embeddings);
        if (t.rank() != 2 || t.shape[0] != cameras.size())
            throw ValidationError("--embeddings: expected one row per camera");
        const auto v = t.as<double>();
        const std::size_t d = t.shape[1];
        for (std::size_t i = 0; i < cameras.size(); ++i) {
            Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(v.data() + i * d, static_cast<Eigen::Index>(d));
            const double n = e.norm();
            if (n > 0) e /= n;
            table.push_back(std::move(e));
        }
    } else {
        for (const auto& cam : cameras) table.push_back(cam.forward().normalized());
    }
    const prep::EmbeddingHook embed = [&table](std::size_t id) { return table.at(id); };

    prep::ViewGroupConfig cfg = o.cfg;
    cfg.seed = c.seed;
    cfg.frustum.threads = c.threads;
    const auto groups = prep::build_view_groups(cameras, cfg, embed);

    const auto ids = [&](const std::vector<std::size_t>& idx) {
        json a = json::array();
        for (auto i : idx) a.push_back(cameras[i].id);
        return a;
    };
    json doc = json::array();
    for (const auto& g : groups)
        doc.push_back({{"anchor", cameras[g.anchor].id},
                       {"neighborhood", ids(g.neighborhood)},
                       {"inputs", ids(g.inputs)},
                       {"easy", ids(g.easy)},
                       {"hard", ids(g.hard)}});
    const fs::path file = c.out / "view_groups.json";
    std::ofstream f(file, std::ios::trunc);
    if (!f) throw IoError("cannot write " + file.string());
    f << doc.dump(2) << '\n';
    f.close();
    m.output("view_groups", file);
    m.config() = {{"group_size", cfg.group_size},  {"anchors", cfg.anchors},
                  {"inputs", cfg.inputs},          {"iou_threshold", cfg.iou_threshold},
                  {"easy_fraction", cfg.easy_fraction}, {"hard_count", cfg.hard_count},
                  {"samples", cfg.frustum.samples}, {"embedding", o.embeddings.empty() ? "forward" : "file"}};
    m.finish();
    for (const auto& g : groups)
        out << "group anchor " << cameras[g.anchor].id << ": " << g.inputs.size() << " inputs, " << g.easy.size()
            << " easy, " << g.hard.size() << " hard\n";
    return kExitOk;
}

}  // namespace

void register_eval_commands(CLI::App& app, Registry& reg) {
    {
        auto o = std::make_shared<PoseOpts>();
        Entry& e = add_command(app, reg, "eval-pose", "Scale-aligned translation and rotation error");
        e.app->add_option("--gt", o->gt, "Ground-truth camera JSON")->required();
        e.app->add_option("--pred", o->pred, "Predicted camera JSON, same frame order")->required();
        e.app->add_option("--scene-scale", o->scene_scale, "Meters per scene unit")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        e.run = [o](const Common& c, std::ostream& out) { return run_pose(*o, c, out); };
    }
    {
        auto o = std::make_shared<ChamferOpts>();
        Entry& e = add_command(app, reg, "eval-chamfer", "Symmetric squared Chamfer distance");
        e.app->add_option("--a", o->a, "FTC1 N x 3 point set")->required();
        e.app->add_option("--b", o->b, "FTC1 M x 3 point set")->required();
        e.run = [o](const Common& c, std::ostream& out) { return run_chamfer(*o, c, out); };
    }
    {
        auto o = std::make_shared<CovisOpts>();
        Entry& e = add_command(app, reg, "eval-covis", "Co-visibility masks and masked PSNR/SSIM");
        e.app->add_option("--points", o->points, "FTC1 N x 3 reference points")->required();
        e.app->add_option("--cameras", o->cameras, "Novel-view camera JSON")->required();
        e.app->add_option("--views", o->views, "Comma-separated camera ids");
        e.app->add_option("--depth", o->depth, "FTC1 V x H x W x 1 novel-view depth");
        e.app->add_option("--scene", o->scene, "Scene PLY whose centers give the novel-view depth");
        e.app->add_option("--tol", o->tol, "Relative depth tolerance")->capture_default_str();
        e.app->add_option("--pred", o->pred, "FTC1 V x H x W x 3 rendered images");
        e.app->add_option("--gt", o->gt, "FTC1 V x H x W x 3 reference images");
        e.run = [o](const Common& c, std::ostream& out) { return run_covis(*o, c, out); };
    }
    {
        auto o = std::make_shared<PrepOpts>();
        Entry& e = add_command(app, reg, "prep-views", "Pose graph, anchors, inputs and target views");
        e.app->add_option("--cameras", o->cameras, "Camera JSON")->required();
        e.app->add_option("--embeddings", o->embeddings, "FTC1 N x E image embeddings (default: view directions)");
        e.app->add_option("--group-size", o->cfg.group_size, "Neighbours per node")->capture_default_str();
        e.app->add_option("--anchors", o->cfg.anchors, "Groups sampled")->capture_default_str();
        e.app->add_option("--inputs", o->cfg.inputs, "Input views per group")->capture_default_str();
        e.app->add_option("--tau", o->cfg.iou_threshold, "Frustum IoU threshold")->capture_default_str();
        e.app->add_option("--easy-fraction", o->cfg.easy_fraction, "Share of easy targets")->capture_default_str();
        e.app->add_option("--hard-count", o->cfg.hard_count, "Hard targets (-1: as many as easy)")
            ->capture_default_str();
        e.app->add_option("--samples", o->cfg.frustum.samples, "Monte-Carlo samples per frustum")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        e.run = [o](const Common& c, std::ostream& out) { return run_prep(*o, c, out); };
    }
}

}  // namespace splatfeat::cli
