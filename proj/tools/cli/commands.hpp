#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "manifest.hpp"
#include "splatfeat/camera.hpp"
#include "splatfeat/feature_map.hpp"

namespace splatfeat::cli {

using Runner = std::function<int(const Common&, std::ostream&)>;

struct Entry {
    CLI::App* app = nullptr;
    std::shared_ptr<Common> common;
    Runner run;
};

struct Registry {
    std::vector<std::unique_ptr<Entry>> commands;
};

/// New subcommand carrying --seed, --threads, --precision and --out.
Entry& add_command(CLI::App& app, Registry& reg, const std::string& name, const std::string& description);

void register_scene_commands(CLI::App& app, Registry& reg);
void register_eval_commands(CLI::App& app, Registry& reg);
void register_check_commands(CLI::App& app, Registry& reg);

// helpers shared by the command files

/// Throws ValidationError naming the flag when the file is missing.
void require_file(const std::string& flag, const std::filesystem::path& path);

/// Cameras whose ids are listed (comma separated), or all when `ids` is empty.
std::vector<CameraView> select_views(std::vector<CameraView> cameras, const std::string& ids);

/// Downsample factor binding a latent grid of height x width to the camera.
int latent_factor(const CameraView& cam, int height, int width);

template <class T>
void write_stack(const std::filesystem::path& path, const std::vector<FeatureMap<T>>& maps) {
    write_tensor(path, stack_to_tensor<T>(maps));
}

}  // namespace splatfeat::cli
