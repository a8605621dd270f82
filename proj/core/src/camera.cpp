#include "splatfeat/camera.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "splatfeat/error.hpp"

namespace splatfeat {

using nlohmann::json;

CameraView CameraView::downsampled(int factor) const {
    if (factor <= 0) throw PreconditionError("downsample factor must be positive");
    CameraView out = *this;
    const double f = static_cast<double>(factor);
    out.fx = fx / f;
    out.fy = fy / f;
    out.cx = (cx + 0.5) / f - 0.5;
    out.cy = (cy + 0.5) / f - 0.5;
    out.width = width / factor;
    out.height = height / factor;
    return out;
}

void CameraView::validate() const {
    const std::string who = "camera '" + id + "': ";
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        throw ValidationError(who + "focal lengths must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw ValidationError(who + "non-finite principal point");
    if (width <= 0 || height <= 0) throw ValidationError(who + "resolution must be positive");
    if (!world_to_cam.allFinite()) throw ValidationError(who + "non-finite extrinsics");
    const Eigen::Matrix3d r = rotation();
    const double dev = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
    if (dev > 1e-4)
        throw ValidationError(who + "rotation block is not orthonormal (Frobenius deviation " +
                              std::to_string(dev) + ")");
    if (r.determinant() < 0.0) throw ValidationError(who + "rotation block has determinant -1");
    const Eigen::RowVector4d last = world_to_cam.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
        throw ValidationError(who + "last row of world_to_cam must be (0, 0, 0, 1)");
}

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up) {
    const Eigen::Vector3d z = (target - eye).normalized();
    Eigen::Vector3d x = z.cross(up);
    if (x.norm() < 1e-12) x = z.cross(Eigen::Vector3d::UnitX());
    x.normalize();
    const Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.row(0).head<3>() = x.transpose();
    m.row(1).head<3>() = y.transpose();
    m.row(2).head<3>() = z.transpose();
    m.topRightCorner<3, 1>() = -m.topLeftCorner<3, 3>() * eye;
    return m;
}

namespace {

const json& require(const json& obj, const char* key, std::size_t index) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ValidationError("camera " + std::to_string(index) + ": missing field '" + key + "'");
    return *it;
}

double number(const json& obj, const char* key, std::size_t index) {
    const auto& v = require(obj, key, index);
    if (!v.is_number())
        throw ValidationError("camera " + std::to_string(index) + ": field '" + key +
                              "' must be a number");
    return v.get<double>();
}

}  // namespace

std::vector<CameraView> parse_cameras(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("camera json: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("camera json: top level must be an array");
    std::vector<CameraView> cams;
    cams.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& obj = doc[i];
        if (!obj.is_object()) throw ParseError("camera json: entry " + std::to_string(i) + " is not an object");
        CameraView cam;
        const auto& id = require(obj, "id", i);
        if (id.is_string())
            cam.id = id.get<std::string>();
        else if (id.is_number_integer())
            cam.id = std::to_string(id.get<long long>());
        else
            throw ValidationError("camera " + std::to_string(i) + ": id must be a string or integer");
        cam.fx = number(obj, "fx", i);
        cam.fy = number(obj, "fy", i);
        cam.cx = number(obj, "cx", i);
        cam.cy = number(obj, "cy", i);
        cam.width = static_cast<int>(number(obj, "width", i));
        cam.height = static_cast<int>(number(obj, "height", i));
        const auto& m = require(obj, "world_to_cam", i);
        if (!m.is_array() || m.size() != 16)
            throw ValidationError("camera " + std::to_string(i) +
                                  ": world_to_cam must hold 16 numbers");
        for (int k = 0; k < 16; ++k) {
            if (!m[k].is_number())
                throw ValidationError("camera " + std::to_string(i) + ": world_to_cam[" +
                                      std::to_string(k) + "] is not a number");
            cam.world_to_cam(k / 4, k % 4) = m[k].get<double>();
        }
        cam.validate();
        cams.push_back(std::move(cam));
    }
    return cams;
}

std::vector<CameraView> load_cameras(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open camera file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_cameras(ss.str());
}

std::string dump_cameras(std::span<const CameraView> cameras) {
    json doc = json::array();
    for (const auto& c : cameras) {
        json m = json::array();
        for (int k = 0; k < 16; ++k) m.push_back(c.world_to_cam(k / 4, k % 4));
        doc.push_back({{"id", c.id},
                       {"fx", c.fx},
                       {"fy", c.fy},
                       {"cx", c.cx},
                       {"cy", c.cy},
                       {"width", c.width},
                       {"height", c.height},
                       {"world_to_cam", m}});
    }
    return doc.dump(2) + "\n";
}

void save_cameras(const std::filesystem::path& path, std::span<const CameraView> cameras) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << dump_cameras(cameras);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace splatfeat
