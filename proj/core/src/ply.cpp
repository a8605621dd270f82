#include "splatfeat/ply.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "splatfeat/error.hpp"
#include "splatfeat/tensor_io.hpp"

namespace splatfeat {
namespace {

struct Property {
    std::string name;
    std::string type;
    std::size_t size = 0;
    std::size_t offset = 0;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
    std::size_t stride = 0;
};

std::size_t type_size(const std::string& t) {
    static const std::map<std::string, std::size_t> sizes = {
        {"char", 1},  {"int8", 1},   {"uchar", 1}, {"uint8", 1},  {"short", 2},
        {"int16", 2}, {"ushort", 2}, {"uint16", 2}, {"int", 4},   {"int32", 4},
        {"uint", 4},  {"uint32", 4}, {"float", 4}, {"float32", 4}, {"double", 8},
        {"float64", 8}};
    auto it = sizes.find(t);
    if (it == sizes.end()) throw ParseError("PLY: unsupported property type '" + t + "'");
    return it->second;
}

template <class T>
T load_le(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double read_scalar(const std::uint8_t* p, const std::string& t) {
    if (t == "float" || t == "float32") return load_le<float>(p);
    if (t == "double" || t == "float64") return load_le<double>(p);
    if (t == "char" || t == "int8") return load_le<std::int8_t>(p);
    if (t == "uchar" || t == "uint8") return load_le<std::uint8_t>(p);
    if (t == "short" || t == "int16") return load_le<std::int16_t>(p);
    if (t == "ushort" || t == "uint16") return load_le<std::uint16_t>(p);
    if (t == "int" || t == "int32") return load_le<std::int32_t>(p);
    return load_le<std::uint32_t>(p);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double y) { return std::log(y / (1.0 - y)); }

float activate_opacity(float raw) { return static_cast<float>(sigmoid(raw)); }
float activate_scale(float raw) { return static_cast<float>(std::exp(static_cast<double>(raw))); }

// Finds a float pre-activation value whose activation reproduces `target`
// bit-exactly when one exists near the analytic inverse; otherwise the
// closest one found.
template <class Forward>
float invert_activation(float target, double analytic_inverse, double lo, double hi,
                        Forward forward) {
    const double clamped = std::isfinite(analytic_inverse)
                               ? std::min(hi, std::max(lo, analytic_inverse))
                               : (analytic_inverse > 0 ? hi : lo);
    const float start = static_cast<float>(clamped);
    float best = start;
    double best_err = std::abs(static_cast<double>(forward(start)) - target);
    if (best_err == 0.0) return start;
    float up = start, down = start;
    for (int k = 1; k <= 64; ++k) {
        up = std::nextafter(up, std::numeric_limits<float>::infinity());
        down = std::nextafter(down, -std::numeric_limits<float>::infinity());
        for (float cand : {up, down}) {
            const double err = std::abs(static_cast<double>(forward(cand)) - target);
            if (err < best_err) {
                best_err = err;
                best = cand;
                if (err == 0.0) return best;
            }
        }
    }
    return best;
}

std::vector<std::string> layout_names(int sh_degree) {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    const int rest = 3 * (sh_coeff_count(sh_degree) - 1);
    for (int i = 0; i < rest; ++i) names.push_back("f_rest_" + std::to_string(i));
    names.push_back("opacity");
    for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
    return names;
}

}  // namespace

std::filesystem::path feature_sidecar_path(const std::filesystem::path& ply_path) {
    auto p = ply_path;
    p.replace_extension(".features.ftc");
    return p;
}

GaussianScene load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PLY: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        throw ParseError("PLY: missing 'ply' magic in " + path.string());
    std::vector<Element> elements;
    bool format_ok = false;
    while (true) {
        if (!std::getline(in, line)) throw ParseError("PLY: header has no end_header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "end_header") break;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                throw ParseError("PLY: unsupported format '" + fmt + "' (need binary_little_endian)");
            format_ok = true;
        } else if (tok == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (!ls) throw ParseError("PLY: malformed element line: " + line);
            elements.push_back(std::move(e));
        } else if (tok == "property") {
            if (elements.empty()) throw ParseError("PLY: property before any element");
            std::string type, name;
            ls >> type;
            if (type == "list") throw ParseError("PLY: list properties are not supported");
            ls >> name;
            Property p{name, type, type_size(type), elements.back().stride};
            elements.back().stride += p.size;
            elements.back().props.push_back(std::move(p));
        }
        // comment / obj_info lines are ignored
    }
    if (!format_ok) throw ParseError("PLY: missing format line");

    std::size_t skip = 0;
    const Element* vertex = nullptr;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            vertex = &e;
            break;
        }
        skip += e.count * e.stride;
    }
    if (!vertex) throw ParseError("PLY: missing element 'vertex'");

    std::map<std::string, const Property*> by_name;
    for (const auto& p : vertex->props) by_name[p.name] = &p;
    auto need = [&](const std::string& name) -> const Property* {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ParseError("PLY: missing property '" + name + "'");
        return it->second;
    };

    int rest_count = 0;
    while (by_name.count("f_rest_" + std::to_string(rest_count))) ++rest_count;
    int sh_degree = -1;
    for (int d = 0; d <= kMaxShDegree; ++d)
        if (3 * (sh_coeff_count(d) - 1) == rest_count) sh_degree = d;
    if (sh_degree < 0)
        throw ParseError("PLY: property 'f_rest_" + std::to_string(rest_count) +
                         "' missing (f_rest count " + std::to_string(rest_count) +
                         " is not 0, 9, 24 or 45)");

    const Property* px = need("x");
    const Property* py = need("y");
    const Property* pz = need("z");
    const Property* dc[3] = {need("f_dc_0"), need("f_dc_1"), need("f_dc_2")};
    std::vector<const Property*> rest;
    for (int i = 0; i < rest_count; ++i) rest.push_back(need("f_rest_" + std::to_string(i)));
    const Property* op = need("opacity");
    const Property* sc[3] = {need("scale_0"), need("scale_1"), need("scale_2")};
    const Property* rot[4] = {need("rot_0"), need("rot_1"), need("rot_2"), need("rot_3")};

    in.seekg(static_cast<std::streamoff>(skip), std::ios::cur);
    std::vector<std::uint8_t> body(vertex->count * vertex->stride);
    in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (static_cast<std::size_t>(in.gcount()) != body.size())
        throw ParseError("PLY: truncated vertex data (expected " + std::to_string(vertex->count) +
                         " vertices)");

    const int rest_per_channel = sh_coeff_count(sh_degree) - 1;
    std::vector<Gaussian> gaussians(vertex->count);
    for (std::size_t i = 0; i < vertex->count; ++i) {
        const std::uint8_t* row = body.data() + i * vertex->stride;
        auto get = [&](const Property* p) {
            const double v = read_scalar(row + p->offset, p->type);
            if (!std::isfinite(v))
                throw ValidationError("PLY: non-finite value in property '" + p->name +
                                      "' at vertex " + std::to_string(i));
            return v;
        };
        Gaussian& g = gaussians[i];
        g.position = {static_cast<float>(get(px)), static_cast<float>(get(py)),
                      static_cast<float>(get(pz))};
        for (int c = 0; c < 3; ++c) g.sh_at(0, c) = static_cast<float>(get(dc[c]));
        // f_rest is channel-major: all coefficients of R, then G, then B.
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < rest_per_channel; ++k)
                g.sh_at(k + 1, c) = static_cast<float>(get(rest[c * rest_per_channel + k]));
        g.opacity = activate_opacity(static_cast<float>(get(op)));
        for (int a = 0; a < 3; ++a) g.scale[a] = activate_scale(static_cast<float>(get(sc[a])));
        for (int a = 0; a < 4; ++a) g.rotation[a] = static_cast<float>(get(rot[a]));
        if (!g.scale.allFinite())
            throw ValidationError("PLY: scale overflows after exp at vertex " + std::to_string(i));
    }

    GaussianScene scene(std::move(gaussians), sh_degree);
    const auto sidecar = feature_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        const Tensor t = read_tensor(sidecar);
        if (t.rank() != 2 || t.shape[0] != scene.size())
            throw ValidationError("feature sidecar " + sidecar.string() +
                                  " must be an N x C tensor with N = " + std::to_string(scene.size()));
        const auto values = t.as<double>();
        RowMatrix<double> f = Eigen::Map<const RowMatrix<double>>(
            values.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
        scene = scene.with_features(std::move(f));
    }
    return scene;
}

void save_ply(const GaussianScene& scene, const std::filesystem::path& path) {
    const auto names = layout_names(scene.sh_degree());
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
    for (const auto& n : names) header << "property float " << n << "\n";
    header << "end_header\n";

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));

    const int rest_per_channel = sh_coeff_count(scene.sh_degree()) - 1;
    std::vector<float> row;
    row.reserve(names.size());
    for (const auto& g : scene.gaussians()) {
        row.clear();
        row.insert(row.end(), {g.position.x(), g.position.y(), g.position.z(), 0.f, 0.f, 0.f});
        for (int c = 0; c < 3; ++c) row.push_back(g.sh_at(0, c));
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < rest_per_channel; ++k) row.push_back(g.sh_at(k + 1, c));
        row.push_back(invert_activation(g.opacity, logit(g.opacity), -110.0, 30.0, activate_opacity));
        for (int a = 0; a < 3; ++a)
            row.push_back(invert_activation(g.scale[a], std::log(static_cast<double>(g.scale[a])),
                                            -100.0, 80.0, activate_scale));
        for (int a = 0; a < 4; ++a) row.push_back(g.rotation[a]);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path.string());
    out.close();

    const auto sidecar = feature_sidecar_path(path);
    if (scene.has_features()) {
        const auto& f = scene.features();
        std::vector<double> values(f.data(), f.data() + f.size());
        write_tensor(sidecar, Tensor({static_cast<std::uint64_t>(f.rows()),
                                      static_cast<std::uint64_t>(f.cols())},
                                     std::move(values)));
    } else if (std::filesystem::exists(sidecar)) {
        std::filesystem::remove(sidecar);
    }
}

}  // namespace splatfeat
