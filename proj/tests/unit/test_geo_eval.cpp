#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <limits>
#include <numbers>

#include "generators.hpp"
#include "oracles.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/geo_eval/chamfer.hpp"
#include "splatfeat/geo_eval/covis.hpp"
#include "splatfeat/geo_eval/image_metrics.hpp"
#include "splatfeat/geo_eval/trajectory.hpp"
#include "splatfeat/rasterizer.hpp"

using namespace splatfeat;
using namespace splatfeat::geo;
using splatfeat::testing::brute_chamfer;
using splatfeat::testing::front_camera;
using splatfeat::testing::golden_section_min;
using splatfeat::testing::random_points;
using splatfeat::testing::random_rotation;
using V3 = Eigen::Vector3d;

namespace {

using splatfeat::testing::Quad;

Quad scale_objective(const std::vector<V3>& gt, const std::vector<V3>& pred, Quad s) {
    Quad sum = 0;
    for (std::size_t f = 0; f < gt.size(); ++f)
        for (int a = 0; a < 3; ++a) {
            const Quad r = Quad(gt[f][a]) - s * Quad(pred[f][a]);
            sum += r * r;
        }
    return sum;
}

Trajectory random_trajectory(Rng& rng, int frames) {
    Trajectory t;
    for (int f = 0; f < frames; ++f) {
        t.centers.push_back(V3(normal01(rng), normal01(rng), normal01(rng)));
        t.rotations.push_back(random_rotation(rng));
    }
    return t;
}

}  // namespace

TEST(AlignScale, WorkedExamples) {
    EXPECT_EQ(align_scale(std::vector<V3>{{2, 0, 0}}, std::vector<V3>{{1, 0, 0}}), 2.0);
    const std::vector<V3> gt{{1, 0, 0}, {0, 2, 0}}, pred{{1, 0, 0}, {0, 1, 0}};
    EXPECT_EQ(align_scale(gt, pred), 1.5);
    EXPECT_NEAR(golden_section_min([&](Quad s) { return scale_objective(gt, pred, s); }, -10, 10), 1.5, 1e-10);
    EXPECT_EQ(align_scale(gt, gt), 1.0);
}

TEST(AlignScale, MatchesNumericMinimizer) {
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        const auto gt = random_points(rng, 2 + trial, 3.0);
        const auto pred = random_points(rng, gt.size(), 3.0);
        const double s = align_scale(gt, pred);
        const double numeric = golden_section_min([&](Quad x) { return scale_objective(gt, pred, x); }, -50, 50);
        EXPECT_NEAR(s, numeric, 1e-10);
    }
}

TEST(AlignScale, RejectsDegenerateInput) {
    EXPECT_THROW(align_scale(std::vector<V3>{{1, 0, 0}}, std::vector<V3>{{0, 0, 0}}), PreconditionError);
    EXPECT_THROW(align_scale(std::vector<V3>{{1, 0, 0}}, std::vector<V3>{}), PreconditionError);
}

TEST(PoseError, IdenticalTrajectoriesAreExact) {
    Rng rng(2);
    const auto t = random_trajectory(rng, 8);
    const auto e = pose_error(t, t);
    EXPECT_EQ(e.translation_cm, 0.0);
    EXPECT_EQ(e.rotation_deg, 0.0);
}

TEST(PoseError, HalfTurnAboutZ) {
    Rng rng(3);
    const auto gt = random_trajectory(rng, 5);
    auto pred = gt;
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(std::numbers::pi, V3::UnitZ()).toRotationMatrix();
    for (auto& r : pred.rotations) r = r * rz;
    EXPECT_NEAR(pose_error(gt, pred).rotation_deg, 180.0, 1e-6);
}

TEST(PoseError, ScaleIsAbsorbed) {
    Rng rng(4);
    const auto gt = random_trajectory(rng, 6);
    auto pred = gt;
    for (auto& c : pred.centers) c *= 2.0;
    EXPECT_NEAR(pose_error(gt, pred).translation_cm, 0.0, 1e-12);
}

TEST(PoseError, ReportsCentimeters) {
    Trajectory gt, pred;
    gt.centers = {V3::Zero(), V3(1, 0, 0)};
    pred.centers = {V3::Zero(), V3(1, 0, 0)};
    gt.rotations = pred.rotations = {Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity()};
    pred.centers[1] = V3(1, 0.5, 0);  // s* = 1/1.25, residual length 0.5/sqrt(1.25)
    const double expect = 0.5 / std::sqrt(1.25) / 2 * 100 * 3;
    EXPECT_NEAR(pose_error(gt, pred, 3.0).translation_cm, expect, 1e-12);
}

TEST(PoseError, InvariantToGlobalRigidMotion) {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto gt = random_trajectory(rng, 7);
        auto pred = gt;
        for (std::size_t f = 0; f < pred.size(); ++f) {
            pred.centers[f] = 0.7 * pred.centers[f] + V3(normal01(rng), normal01(rng), normal01(rng)) * 0.1;
            pred.rotations[f] = pred.rotations[f] * Eigen::AngleAxisd(0.2 * normal01(rng), V3::UnitX()).toRotationMatrix();
        }
        const auto base = pose_error(gt, pred);
        // world-to-camera rotations R act on world points: R' = R Q^T, C' = Q C + t
        const Eigen::Matrix3d q = random_rotation(rng);
        const V3 shift(normal01(rng), normal01(rng), normal01(rng));
        auto gt2 = gt, pred2 = pred;
        for (auto* tr : {&gt2, &pred2})
            for (std::size_t f = 0; f < tr->size(); ++f) {
                tr->centers[f] = q * tr->centers[f] + shift;
                tr->rotations[f] = tr->rotations[f] * q.transpose();
            }
        const auto moved = pose_error(gt2, pred2);
        EXPECT_NEAR(moved.translation_cm, base.translation_cm, 1e-9);
        EXPECT_NEAR(moved.rotation_deg, base.rotation_deg, 1e-6);
        auto scaled = pred;
        for (auto& c : scaled.centers) c *= 3.5;
        EXPECT_NEAR(pose_error(gt, scaled).translation_cm, base.translation_cm, 1e-9);
    }
}

TEST(PoseError, LengthMismatchRejected) {
    Rng rng(6);
    EXPECT_ANY_THROW(pose_error(random_trajectory(rng, 3), random_trajectory(rng, 4)));
}

TEST(Trajectory, FromCamerasUsesCenters) {
    auto cam = front_camera(8, 8, 10);
    cam.world_to_cam(0, 3) = 2.0;
    const auto t = Trajectory::from_cameras(std::vector<CameraView>{cam});
    EXPECT_EQ(t.centers[0], V3(-2, 0, 0));
    Trajectory bad;
    EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Chamfer, WorkedExamples) {
    const std::vector<V3> a{V3::Zero()}, b{V3(1, 0, 0)};
    EXPECT_EQ(chamfer(a, b), 2.0);
    EXPECT_EQ(brute_chamfer(a, b), 2.0);
    Rng rng(7);
    const auto p = random_points(rng, 100, 1.0);
    EXPECT_EQ(chamfer(p, p), 0.0);
}

TEST(Chamfer, KdTreeMatchesBruteForceExactly) {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = random_points(rng, 500, 2.0), b = random_points(rng, 400 + trial * 50, 2.0);
        EXPECT_EQ(chamfer(a, b), brute_chamfer(a, b));
        EXPECT_EQ(chamfer(a, b, 1), chamfer(a, b, 5));
    }
}

TEST(Chamfer, SymmetricAndZeroOnlyForEqualSets) {
    Rng rng(9);
    const auto a = random_points(rng, 200, 1.0), b = random_points(rng, 150, 1.0);
    EXPECT_EQ(chamfer(a, b), chamfer(b, a));
    auto shuffled = a;
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(chamfer(a, shuffled), 0.0);
    auto moved = a;
    moved[17].x() += 1e-3;
    EXPECT_GT(chamfer(a, moved), 0.0);
}

TEST(Chamfer, DuplicatePointsAndEmptySets) {
    const std::vector<V3> a{V3::Zero(), V3::Zero()}, b{V3::Zero()};
    EXPECT_EQ(chamfer(a, b), 0.0);
    EXPECT_THROW(chamfer(a, std::vector<V3>{}), PreconditionError);
}

TEST(KdTree, NearestMatchesScan) {
    Rng rng(10);
    const auto pts = random_points(rng, 300, 1.0);
    const KdTree tree(pts);
    for (int q = 0; q < 100; ++q) {
        const V3 x(normal01(rng), normal01(rng), normal01(rng));
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : pts) best = std::min(best, squared_distance(x, p));
        EXPECT_EQ(tree.nearest(x).squared_distance, best);
    }
}

TEST(Covis, SelfConsistency) {
    Rng rng(11);
    const auto view = front_camera(32, 24, 30);
    std::vector<V3> pts;
    for (int i = 0; i < 400; ++i) pts.push_back(V3(uniform(rng, -1, 1), uniform(rng, -0.7, 0.7), uniform(rng, 2, 4)));
    const auto depth = render_depth_points(pts, view);
    const auto mask = covis_mask(pts, view, depth, 0.05);
    std::size_t covered = 0;
    for (std::size_t p = 0; p < depth.pixel_count(); ++p) {
        const bool finite = std::isfinite(depth.data[p]) && depth.data[p] > 0;
        covered += finite;
        EXPECT_EQ(mask.visible[p], finite ? 1 : 0);
    }
    EXPECT_GT(covered, 0u);
    EXPECT_EQ(mask.count(), covered);
    EXPECT_EQ(mask.inverted().count(), depth.pixel_count() - covered);
}

TEST(Covis, EmptyCloudIsAllFalse) {
    const auto view = front_camera(8, 8, 10);
    const FeatureMap<double> depth(8, 8, 1, 2.0);
    EXPECT_EQ(covis_mask(std::vector<V3>{}, view, depth).count(), 0u);
}

TEST(Covis, OccludedPointsAreNotCovisible) {
    const auto view = front_camera(9, 9, 10);
    const FeatureMap<double> depth(9, 9, 1, 2.0);  // novel-view surface at z = 2
    // camera-space points landing on pixel (4,4): one on the surface, one behind by 50%
    const std::vector<V3> on{V3(0, 0, 2.0)}, behind{V3(0, 0, 3.0)}, inside_tol{V3(0, 0, 2.09)};
    EXPECT_EQ(covis_mask(on, view, depth).visible[4 * 9 + 4], 1);
    EXPECT_EQ(covis_mask(behind, view, depth).count(), 0u);
    EXPECT_EQ(covis_mask(inside_tol, view, depth, 0.05).count(), 1u);
    auto holes = depth;
    holes.data[4 * 9 + 4] = std::numeric_limits<double>::infinity();
    EXPECT_EQ(covis_mask(on, view, holes).count(), 0u);
}

TEST(ImageMetrics, ConstantOffsetIsTwentyDecibels) {
    const FeatureMap<double> gt(16, 16, 3, 0.5), pred(16, 16, 3, 0.6);
    const std::vector<std::uint8_t> full(256, 1);
    const auto q = masked_psnr_ssim(pred, gt, full);
    EXPECT_NEAR(q.psnr, 20.0, 1e-9);
    EXPECT_EQ(q.pixels, 256u);
    // constant images: SSIM reduces to the luminance term (2 mu_x mu_y + C1) / (mu_x^2 + mu_y^2 + C1)
    const double c1 = 1e-4;
    EXPECT_NEAR(q.ssim, (2 * 0.5 * 0.6 + c1) / (0.25 + 0.36 + c1), 1e-12);
}

TEST(ImageMetrics, PerfectMatchIsCapped) {
    const FeatureMap<double> a(4, 4, 1, 0.3);
    const auto q = masked_psnr_ssim(a, a, std::vector<std::uint8_t>(16, 1));
    EXPECT_EQ(q.psnr, kPsnrCap);
    EXPECT_NEAR(q.ssim, 1.0, 1e-12);
}

TEST(ImageMetrics, MaskSplitsAreIndependent) {
    FeatureMap<double> gt(4, 4, 1, 0.5), pred(4, 4, 1, 0.5);
    std::vector<std::uint8_t> left(16, 0);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 2; ++x) {
            left[y * 4 + x] = 1;
            pred.at(y, x, 0) = 0.4;
        }
    std::vector<std::uint8_t> right(16);
    for (int i = 0; i < 16; ++i) right[i] = 1 - left[i];
    EXPECT_NEAR(masked_psnr_ssim(pred, gt, left).psnr, 20.0, 1e-9);
    EXPECT_EQ(masked_psnr_ssim(pred, gt, right).psnr, kPsnrCap);
    EXPECT_NEAR(masked_mse(pred, gt, std::vector<std::uint8_t>(16, 1)), 0.005, 1e-15);
    EXPECT_THROW(masked_psnr_ssim(pred, gt, std::vector<std::uint8_t>(16, 0)), PreconditionError);
}
