#include "splatfeat/sh.hpp"

namespace splatfeat {
namespace {

constexpr float kC1 = 0.4886025119029199f;
constexpr float kC2[] = {1.0925484305920792f, -1.0925484305920792f, 0.31539156525252005f,
                         -1.0925484305920792f, 0.5462742152960396f};
constexpr float kC3[] = {-0.5900435899266435f, 2.890611442640554f, -0.4570457994644658f,
                         0.3731763325901154f,  -0.4570457994644658f, 1.445305721320277f,
                         -0.5900435899266435f};

Eigen::Vector3f coeff(const Gaussian& g, int k) {
    return {g.sh_at(k, 0), g.sh_at(k, 1), g.sh_at(k, 2)};
}

}  // namespace

Eigen::Vector3f sh_dc_color(const Gaussian& g) {
    return (kShC0 * coeff(g, 0).array() + 0.5f).cwiseMax(0.f);
}

Eigen::Vector3f sh_color(const Gaussian& g, int degree, const Eigen::Vector3f& dir) {
    Eigen::Vector3f c = kShC0 * coeff(g, 0);
    if (degree > 0) {
        const float x = dir.x(), y = dir.y(), z = dir.z();
        c += -kC1 * y * coeff(g, 1) + kC1 * z * coeff(g, 2) - kC1 * x * coeff(g, 3);
        if (degree > 1) {
            const float xx = x * x, yy = y * y, zz = z * z, xy = x * y, yz = y * z, xz = x * z;
            c += kC2[0] * xy * coeff(g, 4) + kC2[1] * yz * coeff(g, 5) +
                 kC2[2] * (2.f * zz - xx - yy) * coeff(g, 6) + kC2[3] * xz * coeff(g, 7) +
                 kC2[4] * (xx - yy) * coeff(g, 8);
            if (degree > 2) {
                c += kC3[0] * y * (3.f * xx - yy) * coeff(g, 9) + kC3[1] * xy * z * coeff(g, 10) +
                     kC3[2] * y * (4.f * zz - xx - yy) * coeff(g, 11) +
                     kC3[3] * z * (2.f * zz - 3.f * xx - 3.f * yy) * coeff(g, 12) +
                     kC3[4] * x * (4.f * zz - xx - yy) * coeff(g, 13) +
                     kC3[5] * z * (xx - yy) * coeff(g, 14) +
                     kC3[6] * x * (xx - 3.f * yy) * coeff(g, 15);
            }
        }
    }
    return (c.array() + 0.5f).cwiseMax(0.f);
}

}  // namespace splatfeat
