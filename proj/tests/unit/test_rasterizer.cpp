#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "oracles.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/sh.hpp"

using namespace splatfeat;
using splatfeat::testing::front_camera;
using splatfeat::testing::naive_render;
using splatfeat::testing::random_scene;

namespace {

Gaussian gaussian_at(const Eigen::Vector3f& p, float scale, float opacity) {
    Gaussian g;
    g.position = p;
    g.scale = Eigen::Vector3f::Constant(scale);
    g.opacity = opacity;
    return g;
}

std::size_t center_pixel(const CameraView& cam) {
    return static_cast<std::size_t>(cam.cy) * cam.width + static_cast<std::size_t>(cam.cx);
}

}  // namespace

TEST(Project, IsotropicOnAxisMatchesPinholeJacobian) {
    const CameraView cam = front_camera(65, 65, 100.0);
    const GaussianScene scene({gaussian_at({0, 0, 2}, 1.f, 1.f)});
    const auto p = project(scene, cam);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_FLOAT_EQ(p[0].mean2d.x(), 32.f);
    EXPECT_FLOAT_EQ(p[0].mean2d.y(), 32.f);
    // J = diag(f / z) at the optical axis, so cov2d = (f s / z)^2 I + floor.
    const float expected = (100.f / 2.f) * (100.f / 2.f) + 0.3f;
    EXPECT_NEAR(p[0].cov2d(0, 0), expected, 1e-3);
    EXPECT_NEAR(p[0].cov2d(1, 1), expected, 1e-3);
    EXPECT_NEAR(p[0].cov2d(0, 1), 0.f, 1e-4);
    EXPECT_FLOAT_EQ(p[0].depth, 2.f);
}

TEST(Project, BehindCameraIsCulled) {
    const CameraView cam = front_camera(32, 32, 30.0);
    ProjectionStats stats;
    const auto p = project(GaussianScene({gaussian_at({0, 0, -1}, 0.1f, 1.f)}), cam, {}, &stats);
    EXPECT_TRUE(p.empty());
    EXPECT_EQ(stats.culled_near, 1u);
}

TEST(Project, IsotropicIgnoresRotation) {
    const CameraView cam = front_camera(64, 64, 80.0);
    Gaussian a = gaussian_at({0.3f, -0.2f, 3.f}, 0.2f, 1.f);
    Gaussian b = a;
    b.rotation = Eigen::Vector4f(0.3f, -0.5f, 0.7f, 0.1f).normalized();
    const auto pa = project(GaussianScene({a}), cam);
    const auto pb = project(GaussianScene({b}), cam);
    ASSERT_EQ(pa.size(), 1u);
    ASSERT_EQ(pb.size(), 1u);
    EXPECT_TRUE(pa[0].cov2d.isApprox(pb[0].cov2d, 1e-5f));
}

TEST(RasterizeColor, SingleGaussianOnPixelCenter) {
    const CameraView cam = front_camera(65, 65, 100.0);
    Gaussian g = gaussian_at({0, 0, 2}, 0.05f, 0.8f);
    g.sh_at(0, 0) = 0.5f;
    g.sh_at(0, 2) = -1.f;
    const auto r = rasterize_color(GaussianScene({g}), cam);
    const auto p = center_pixel(cam);
    const auto list = r.contributions.pixel(p);
    ASSERT_EQ(list.size(), 1u);
    EXPECT_FLOAT_EQ(list[0].weight, 0.8f);
    const Eigen::Vector3f c = sh_dc_color(g);
    for (int ch = 0; ch < 3; ++ch) EXPECT_FLOAT_EQ(r.image.at(32, 32, ch), c[ch] * 0.8f);
}

TEST(RasterizeColor, TwoCoincidentHalfAlphas) {
    const CameraView cam = front_camera(65, 65, 100.0);
    const Gaussian g = gaussian_at({0, 0, 2}, 0.05f, 0.5f);
    const auto r = rasterize_color(GaussianScene({g, g}), cam);
    const auto list = r.contributions.pixel(center_pixel(cam));
    ASSERT_EQ(list.size(), 2u);
    EXPECT_EQ(list[0].gaussian_id, 0u);
    EXPECT_FLOAT_EQ(list[0].weight, 0.5f);
    EXPECT_FLOAT_EQ(list[1].weight, 0.25f);
}

TEST(RasterizeColor, EmptySceneIsBlack) {
    const CameraView cam = front_camera(20, 10, 10.0);
    const auto r = rasterize_color(GaussianScene(), cam);
    for (float v : r.image.data) EXPECT_EQ(v, 0.f);
    EXPECT_TRUE(r.contributions.entries.empty());
    EXPECT_EQ(r.contributions.offsets.size(), 201u);
    for (auto id : r.dominant.ids) EXPECT_EQ(id, kNoGaussian);
}

TEST(RasterizeFeatures, ScalesFeatureByWeight) {
    const CameraView cam = front_camera(65, 65, 100.0);
    RowMatrix<double> f = RowMatrix<double>::Zero(1, 4);
    f(0, 0) = 1.0;
    const auto scene = GaussianScene({gaussian_at({0, 0, 2}, 0.05f, 0.8f)}).with_features(f);
    const auto r = rasterize_features<double>(scene, cam);
    EXPECT_DOUBLE_EQ(r.features.at(32, 32, 0), static_cast<double>(0.8f));
    for (int c = 1; c < 4; ++c) EXPECT_EQ(r.features.at(32, 32, c), 0.0);
}

TEST(RasterizeFeatures, ZeroFeaturesRenderZero) {
    Rng rng(1);
    auto sc = random_scene(rng, 20, 32, 32, 4);
    const auto scene = sc.scene.with_features(RowMatrix<double>::Zero(static_cast<Eigen::Index>(sc.scene.size()), 4));
    for (double v : rasterize_features<double>(scene, sc.view).features.data) EXPECT_EQ(v, 0.0);
}

TEST(RasterizeFeatures, RequiresFeatures) {
    EXPECT_THROW(rasterize_features<float>(GaussianScene({Gaussian{}}), front_camera(8, 8, 8)), PreconditionError);
}

TEST(RasterizeFeatures, MatchesNaiveRendererBitwise) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(seed);
        const auto sc = random_scene(rng, 64, 48, 40, 4);
        const auto tiled = rasterize_features<float>(sc.scene, sc.view);
        const auto naive = naive_render<float>(sc.scene, sc.view);
        for (std::size_t p = 0; p < naive.pixels.size(); ++p) {
            const auto list = tiled.contributions.pixel(p);
            ASSERT_EQ(list.size(), naive.pixels[p].size()) << "seed " << seed << " pixel " << p;
            for (std::size_t k = 0; k < list.size(); ++k) ASSERT_EQ(list[k], naive.pixels[p][k]);
        }
        EXPECT_EQ(tiled.features.data, naive.features.data) << "seed " << seed;
        EXPECT_EQ(tiled.contributions.accumulated_alpha, naive.accumulated);
    }
}

TEST(RasterizeFeatures, ColorAndFeaturePassesShareWeights) {
    Rng rng(7);
    const auto sc = random_scene(rng, 40, 40, 40, 8);
    EXPECT_TRUE(rasterize_color(sc.scene, sc.view).contributions ==
                rasterize_features<double>(sc.scene, sc.view).contributions);
    EXPECT_TRUE(rasterize_weights(sc.scene, sc.view) == rasterize_features<float>(sc.scene, sc.view).contributions);
}

TEST(RasterizeFeatures, LinearInFeatures) {
    Rng rng(11);
    const auto sc = random_scene(rng, 30, 32, 32, 4);
    const auto n = static_cast<Eigen::Index>(sc.scene.size());
    RowMatrix<double> a = RowMatrix<double>::Random(n, 4), b = RowMatrix<double>::Random(n, 4);
    const double s = 0.7, t = -1.3;
    const auto ra = rasterize_features<double>(sc.scene.with_features(a), sc.view).features;
    const auto rb = rasterize_features<double>(sc.scene.with_features(b), sc.view).features;
    const auto rc = rasterize_features<double>(sc.scene.with_features(s * a + t * b), sc.view).features;
    for (std::size_t i = 0; i < rc.data.size(); ++i) {
        const double expect = s * ra.data[i] + t * rb.data[i];
        EXPECT_NEAR(rc.data[i], expect, 1e-6 * std::max(1.0, std::abs(expect)));
    }
}

TEST(RasterizeFeatures, ThreadCountDoesNotChangeBits) {
    Rng rng(5);
    const auto sc = random_scene(rng, 64, 70, 50, 8);
    RasterConfig one, many;
    one.threads = 1;
    many.threads = 7;
    const auto a = rasterize_features<float>(sc.scene, sc.view, one);
    const auto b = rasterize_features<float>(sc.scene, sc.view, many);
    EXPECT_EQ(a.features.data, b.features.data);
    EXPECT_TRUE(a.contributions == b.contributions);
    EXPECT_TRUE(a.dominant == b.dominant);
}

TEST(RasterizeFeatures, NormalizedOptionDividesByAlpha) {
    Rng rng(9);
    const auto sc = random_scene(rng, 10, 24, 24, 4);
    RasterConfig cfg;
    cfg.normalize_features = true;
    const auto raw = rasterize_features<double>(sc.scene, sc.view);
    const auto norm = rasterize_features<double>(sc.scene, sc.view, cfg);
    for (std::size_t p = 0; p < raw.features.pixel_count(); ++p) {
        const double a = raw.contributions.accumulated_alpha[p];
        for (int c = 0; c < 4; ++c) {
            const double expect = a > 0 ? raw.features.pixel(p)[c] / a : 0.0;
            EXPECT_NEAR(norm.features.pixel(p)[c], expect, 1e-12 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST(Dominant, MatchesContributionMaximum) {
    Rng rng(13);
    const auto sc = random_scene(rng, 50, 40, 30, 4);
    const auto r = rasterize_features<float>(sc.scene, sc.view);
    EXPECT_TRUE(dominant_from(r.contributions) == r.dominant);
    for (std::size_t p = 0; p < r.contributions.pixel_count(); ++p) {
        const auto list = r.contributions.pixel(p);
        EXPECT_EQ(list.empty(), r.dominant.ids[p] == kNoGaussian);
        float best = 0.f;
        for (const auto& c : list) best = std::max(best, c.weight);
        EXPECT_EQ(r.dominant.weights[p], best);
    }
}

TEST(ContributionCap, TruncatesAtMaximum) {
    const CameraView cam = front_camera(9, 9, 10.0);
    std::vector<Gaussian> gs;
    for (int i = 0; i < 40; ++i) gs.push_back(gaussian_at({0, 0, 2.f + 0.01f * i}, 0.5f, 0.05f));
    RasterConfig cfg;
    cfg.max_contributors = 16;
    const auto m = rasterize_weights(GaussianScene(std::move(gs)), cam, cfg);
    EXPECT_EQ(m.pixel(40).size(), 16u);
}

TEST(DepthPoints, NearestPointWinsAndEmptyIsInfinite) {
    const CameraView cam = front_camera(5, 5, 10.0);
    const std::vector<Eigen::Vector3d> pts = {{0, 0, 3}, {0, 0, 2}, {0, 0, -1}};
    const auto d = render_depth_points(pts, cam);
    EXPECT_EQ(d.at(2, 2, 0), 2.0);
    EXPECT_TRUE(std::isinf(d.at(0, 0, 0)));
    const auto behind = render_depth_points(std::vector<Eigen::Vector3d>{{0, 0, -1}}, cam);
    for (double v : behind.data) EXPECT_TRUE(std::isinf(v));
}

TEST(Compositing, WeightsAreAlphaTimesTransmittance) {
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
        Rng rng(seed);
        const auto sc = random_scene(rng, 64, 40, 32, 2);
        const auto m = rasterize_weights(sc.scene, sc.view);
        for (std::size_t p = 0; p < m.pixel_count(); ++p) {
            float trans = 1.f;
            double sum = 0;
            for (const auto& c : m.pixel(p)) {
                ASSERT_EQ(c.weight, c.alpha * trans);
                ASSERT_GE(c.alpha, 1.f / 255.f);
                ASSERT_LE(c.alpha, 0.99f);
                trans *= 1.f - c.alpha;
                sum += c.weight;
            }
            ASSERT_LE(sum, 1.0 + 1e-6);
            ASSERT_GE(trans, 1e-4f);
        }
    }
}
