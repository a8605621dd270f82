#include "cli.hpp"

#include <exception>
#include <sstream>

#include "commands.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/parallel.hpp"

namespace splatfeat::cli {

void require_file(const std::string& flag, const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path) && !std::filesystem::is_directory(path))
        throw ValidationError(flag + ": no such file: " + path.string());
}

std::vector<CameraView> select_views(std::vector<CameraView> cameras, const std::string& ids) {
    if (ids.empty()) return cameras;
    std::vector<CameraView> out;
    std::stringstream ss(ids);
    std::string id;
    while (std::getline(ss, id, ',')) {
        bool found = false;
        for (const auto& c : cameras)
            if (c.id == id) {
                out.push_back(c);
                found = true;
                break;
            }
        if (!found) throw ValidationError("--views: unknown camera id '" + id + "'");
    }
    return out;
}

int latent_factor(const CameraView& cam, int height, int width) {
    if (height <= 0 || width <= 0 || cam.height % height != 0 || cam.width % width != 0 ||
        cam.height / height != cam.width / width)
        throw ValidationError("feature grid " + std::to_string(height) + "x" + std::to_string(width) +
                              " is not an integer downsample of camera '" + cam.id + "' (" +
                              std::to_string(cam.height) + "x" + std::to_string(cam.width) + ")");
    return cam.height / height;
}

Entry& add_command(CLI::App& app, Registry& reg, const std::string& name, const std::string& description) {
    auto entry = std::make_unique<Entry>();
    entry->common = std::make_shared<Common>();
    entry->app = app.add_subcommand(name, description);
    Common& c = *entry->common;
    entry->app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    entry->app->add_option("--threads", c.threads,
                           "Worker threads (0: SPLATFEAT_THREADS or hardware concurrency)")
        ->capture_default_str();
    entry->app->add_option("--precision", c.precision, "Floating-point precision of outputs")
        ->check(CLI::IsMember({"f32", "f64"}))
        ->capture_default_str();
    entry->app->add_option("--out", c.out, "Output directory")->capture_default_str();
    reg.commands.push_back(std::move(entry));
    return *reg.commands.back();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"splatfeat: Gaussian feature lifting, geometry-guided fusion and evaluation"};
    app.name("splatfeat");
    app.require_subcommand(1);
    Registry reg;
    register_scene_commands(app, reg);
    register_eval_commands(app, reg);
    register_check_commands(app, reg);

    if (argc <= 1) {
        err << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    for (auto& entry : reg.commands) {
        if (!entry->app->parsed()) continue;
        Common common = *entry->common;
        try {
            common.threads = resolve_threads(common.threads);
            std::filesystem::create_directories(common.out);
            return entry->run(common, out);
        } catch (const CLI::Error& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kExitValidation;
        } catch (const std::filesystem::filesystem_error& e) {
            err << "error: " << e.what() << '\n';
            return kExitValidation;
        }
    }
    return kExitUsage;
}

}  // namespace splatfeat::cli
