#include "splatfeat/adapter/params.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "splatfeat/error.hpp"
#include "splatfeat/rng.hpp"
#include "splatfeat/tensor_io.hpp"

namespace splatfeat::adapter {

using nlohmann::json;

template <class T>
FusionParams<T> FusionParams<T>::zeros(const FusionConfig& cfg) {
    if (cfg.channels <= 0) throw PreconditionError("fusion params: channels must be positive");
    if (cfg.heads <= 0 || cfg.channels % cfg.heads != 0)
        throw PreconditionError("fusion params: heads must divide channels");
    if (cfg.refine_blocks < 0) throw PreconditionError("fusion params: negative refine depth");
    const int c = cfg.channels;
    FusionParams p;
    p.config = cfg;
    for (int b = 0; b < cfg.refine_blocks; ++b) {
        ConvBlock<T> blk;
        blk.conv1 = RowMatrix<T>::Zero(9 * c, c);
        blk.conv2 = RowMatrix<T>::Zero(9 * c, c);
        blk.scale1 = RowMatrix<T>::Zero(1, c);
        blk.shift1 = RowMatrix<T>::Zero(1, c);
        blk.scale2 = RowMatrix<T>::Zero(1, c);
        blk.shift2 = RowMatrix<T>::Zero(1, c);
        p.refine.push_back(std::move(blk));
    }
    p.proj = Affine<T>::zeros(c, c);
    p.attn = {Affine<T>::zeros(c, c), Affine<T>::zeros(c, c), Affine<T>::zeros(c, c),
              Affine<T>::zeros(c, c)};
    p.gate = {Affine<T>::zeros(2 * c, c), Affine<T>::zeros(c, cfg.per_channel_gate ? c : 1)};
    p.naive = {Affine<T>::zeros(2 * c, c), Affine<T>::zeros(c, c)};
    for (int lc : cfg.level_channels) {
        if (lc <= 0) throw PreconditionError("fusion params: level channels must be positive");
        p.level_in.push_back(Affine<T>::zeros(lc, c));
        p.level_out.push_back(Affine<T>::zeros(c, lc));
    }
    return p;
}

template <class T>
FusionParams<T> FusionParams<T>::random(const FusionConfig& cfg, std::uint64_t seed, T weight_scale) {
    FusionParams p = zeros(cfg);
    Rng rng(seed);
    p.for_each([&](const std::string& name, RowMatrix<T>& m) {
        const bool is_scale = name.find(".scale") != std::string::npos;
        const bool is_shift = name.find(".shift") != std::string::npos;
        const bool is_bias = name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
        const T fan_in = static_cast<T>(std::max<Eigen::Index>(1, m.rows()));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const T z = static_cast<T>(normal01(rng));
            T v;
            if (is_scale)
                v = T(1) + T(0.5) * weight_scale * z;
            else if (is_shift || is_bias)
                v = T(0.1) * weight_scale * z;
            else
                v = weight_scale * z / std::sqrt(fan_in) * T(3);
            m.data()[i] = v;
        }
    });
    return p;
}

template <class T>
std::size_t FusionParams<T>::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const RowMatrix<T>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

template <class T>
void FusionParams<T>::axpy(T step, const FusionParams& other) {
    std::vector<const RowMatrix<T>*> src;
    other.for_each([&](const std::string&, const RowMatrix<T>& m) { src.push_back(&m); });
    std::size_t k = 0;
    for_each([&](const std::string& name, RowMatrix<T>& m) {
        if (k >= src.size() || src[k]->rows() != m.rows() || src[k]->cols() != m.cols())
            throw PreconditionError("fusion params: shape mismatch at " + name);
        m += step * *src[k++];
    });
}

template <class T>
bool FusionParams<T>::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const RowMatrix<T>& m) { ok = ok && m.allFinite(); });
    return ok;
}

template <class T>
template <class U>
FusionParams<U> FusionParams<T>::cast() const {
    FusionParams<U> out = FusionParams<U>::zeros(config);
    std::vector<const RowMatrix<T>*> src;
    for_each([&](const std::string&, const RowMatrix<T>& m) { src.push_back(&m); });
    std::size_t k = 0;
    out.for_each([&](const std::string&, RowMatrix<U>& m) { m = src[k++]->template cast<U>(); });
    return out;
}

namespace {

json config_to_json(const FusionConfig& c) {
    return {{"channels", c.channels},
            {"refine_blocks", c.refine_blocks},
            {"heads", c.heads},
            {"per_channel_gate", c.per_channel_gate},
            {"level_channels", c.level_channels}};
}

FusionConfig config_from_json(const json& j) {
    FusionConfig c;
    try {
        c.channels = j.at("channels").get<int>();
        c.refine_blocks = j.at("refine_blocks").get<int>();
        c.heads = j.at("heads").get<int>();
        c.per_channel_gate = j.at("per_channel_gate").get<bool>();
        c.level_channels = j.at("level_channels").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("fusion params manifest: bad config: ") + e.what());
    }
    return c;
}

std::string safe_file_name(const std::string& name) { return name + ".ftc"; }

}  // namespace

template <class T>
void save_params(const FusionParams<T>& params, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json tensors = json::array();
    const char* dtype = std::is_same_v<T, float> ? "f32" : "f64";
    params.for_each([&](const std::string& name, const RowMatrix<T>& m) {
        const std::vector<std::uint64_t> shape = {static_cast<std::uint64_t>(m.rows()),
                                                  static_cast<std::uint64_t>(m.cols())};
        write_tensor(dir / safe_file_name(name),
                     Tensor(shape, std::vector<T>(m.data(), m.data() + m.size())));
        tensors.push_back({{"name", name}, {"file", safe_file_name(name)}, {"shape", shape}, {"dtype", dtype}});
    });
    json manifest = {{"format", "splatfeat-fusion-params"},
                     {"version", 1},
                     {"config", config_to_json(params.config)},
                     {"tensors", tensors}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

template <class T>
FusionParams<T> load_params(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
    json manifest;
    try {
        std::stringstream ss;
        ss << in.rdbuf();
        manifest = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("fusion params manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "splatfeat-fusion-params")
        throw ValidationError("fusion params manifest: unexpected format tag");
    FusionParams<T> params = FusionParams<T>::zeros(config_from_json(manifest.at("config")));

    std::map<std::string, json> entries;
    for (const auto& t : manifest.at("tensors")) entries[t.at("name").get<std::string>()] = t;
    params.for_each([&](const std::string& name, RowMatrix<T>& m) {
        auto it = entries.find(name);
        if (it == entries.end()) throw ValidationError("fusion params manifest: missing tensor " + name);
        const auto shape = it->second.at("shape").get<std::vector<std::uint64_t>>();
        const Tensor t = read_tensor(dir / it->second.at("file").get<std::string>());
        const std::string dtype = it->second.at("dtype").get<std::string>();
        if ((dtype == "f32") != (t.dtype() == DType::kF32))
            throw ValidationError("fusion params: dtype of " + name + " disagrees with manifest");
        if (t.shape != shape || shape.size() != 2 ||
            shape[0] != static_cast<std::uint64_t>(m.rows()) ||
            shape[1] != static_cast<std::uint64_t>(m.cols()))
            throw ValidationError("fusion params: shape of " + name + " disagrees with config");
        const auto values = t.as<T>();
        m = Eigen::Map<const RowMatrix<T>>(values.data(), m.rows(), m.cols());
        entries.erase(it);
    });
    if (!entries.empty())
        throw ValidationError("fusion params manifest: unexpected tensor " + entries.begin()->first);
    return params;
}

template struct FusionParams<float>;
template struct FusionParams<double>;
template FusionParams<double> FusionParams<float>::cast<double>() const;
template FusionParams<float> FusionParams<double>::cast<float>() const;
template FusionParams<float> FusionParams<float>::cast<float>() const;
template FusionParams<double> FusionParams<double>::cast<double>() const;
template void save_params<float>(const FusionParams<float>&, const std::filesystem::path&);
template void save_params<double>(const FusionParams<double>&, const std::filesystem::path&);
template FusionParams<float> load_params<float>(const std::filesystem::path&);
template FusionParams<double> load_params<double>(const std::filesystem::path&);

}  // namespace splatfeat::adapter
