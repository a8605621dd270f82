#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace splatfeat::cli;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "splatfeat");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("splatfeat_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string p(const std::string& name) const { return (dir / name).string(); }
    void synth() {
        const auto r = run_cli({"synth", "--gaussians", "40", "--views", "3", "--channels", "8", "--width", "24",
                                "--height", "16", "--seed", "3", "--out", dir.string()});
        ASSERT_EQ(r.code, kExitOk) << r.err;
    }
    fs::path dir;
};

}  // namespace

TEST_F(CliTest, NoArgumentsIsUsageError) {
    EXPECT_EQ(run_cli({}).code, kExitUsage);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
    EXPECT_EQ(run_cli({"render", "--bogus", "1"}).code, kExitUsage);
}

TEST_F(CliTest, MissingFileIsValidationError) {
    const auto r = run_cli({"render", "--scene", p("nope.ply"), "--cameras", p("nope.json"), "--out", dir.string()});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("nope.ply"), std::string::npos);
}

TEST_F(CliTest, PipelineWritesManifests) {
    synth();
    const auto r1 = run_cli({"render", "--scene", p("scene.ply"), "--cameras", p("cameras.json"), "--out", dir.string()});
    ASSERT_EQ(r1.code, kExitOk) << r1.err;
    const auto r2 = run_cli({"lift", "--scene", p("scene.ply"), "--cameras", p("cameras.json"), "--features",
                             p("features.ftc"), "--out", dir.string()});
    ASSERT_EQ(r2.code, kExitOk) << r2.err;
    const auto r3 = run_cli({"fuse", "--scene", p("lifted.ply"), "--cameras", p("cameras.json"), "--targets",
                             p("features.ftc"), "--refine-blocks", "1", "--out", dir.string()});
    ASSERT_EQ(r3.code, kExitOk) << r3.err;
    const auto r4 = run_cli({"prune", "--scene", p("scene.ply"), "--voxel-size", "0.5", "--out", dir.string()});
    ASSERT_EQ(r4.code, kExitOk) << r4.err;

    for (const char* cmd : {"synth", "render", "lift", "fuse", "prune"}) {
        const auto m = read_json(dir / (std::string(cmd) + ".manifest.json"));
        EXPECT_EQ(m["command"], cmd);
        EXPECT_EQ(m["tool"], "splatfeat");
        ASSERT_FALSE(m["outputs"].empty()) << cmd;
        for (const auto& o : m["outputs"]) {
            EXPECT_TRUE(fs::exists(o["path"].get<std::string>()));
            EXPECT_EQ(o["sha256"].get<std::string>().size(), 64u);
        }
    }
    const auto prune = read_json(dir / "prune.manifest.json");
    EXPECT_GE(prune["results"]["prune_rate"].get<double>(), 0.0);
}

TEST_F(CliTest, SameSeedSameOutputs) {
    synth();
    const auto first = read_json(dir / "synth.manifest.json");
    synth();
    const auto second = read_json(dir / "synth.manifest.json");
    ASSERT_EQ(first["outputs"].size(), second["outputs"].size());
    for (std::size_t i = 0; i < first["outputs"].size(); ++i)
        EXPECT_EQ(first["outputs"][i]["sha256"], second["outputs"][i]["sha256"]);
}

TEST_F(CliTest, EvalCommandsReportPerfectScores) {
    synth();
    const auto pose = run_cli({"eval-pose", "--gt", p("cameras.json"), "--pred", p("cameras.json"), "--out", dir.string()});
    ASSERT_EQ(pose.code, kExitOk) << pose.err;
    const auto m = read_json(dir / "eval-pose.manifest.json");
    EXPECT_EQ(m["results"]["T_err_cm"].get<double>(), 0.0);
    EXPECT_EQ(m["results"]["R_err_deg"].get<double>(), 0.0);
    const auto cd = run_cli({"eval-chamfer", "--a", p("points.ftc"), "--b", p("points.ftc"), "--out", dir.string()});
    ASSERT_EQ(cd.code, kExitOk) << cd.err;
    EXPECT_EQ(read_json(dir / "eval-chamfer.manifest.json")["results"]["CD"].get<double>(), 0.0);
}

TEST_F(CliTest, OutOfRangeOptionIsUsageError) {
    synth();
    EXPECT_EQ(run_cli({"prune", "--scene", p("scene.ply"), "--voxel-size", "-1", "--out", dir.string()}).code,
              kExitUsage);
}
