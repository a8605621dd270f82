#include "splatfeat/geo_eval/image_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "splatfeat/error.hpp"

namespace splatfeat::geo {

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const FeatureMap<double>& pred, const FeatureMap<double>& gt) {
    if (!pred.same_shape(gt)) throw PreconditionError("image metrics: image shapes differ");
}

void check_mask(const FeatureMap<double>& img, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != img.pixel_count())
        throw PreconditionError("image metrics: mask size differs from the image");
    if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }))
        throw PreconditionError("image metrics: mask region is empty");
}

std::vector<double> luma(const FeatureMap<double>& img) {
    std::vector<double> y(img.pixel_count());
    for (std::size_t p = 0; p < y.size(); ++p) {
        const auto px = img.pixel(p);
        if (img.channels == 3)
            y[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        else if (img.channels == 1)
            y[p] = px[0];
        else
            throw PreconditionError("image metrics: expected 1 or 3 channels");
    }
    return y;
}

}  // namespace

double masked_mse(const FeatureMap<double>& pred, const FeatureMap<double>& gt,
                  const std::vector<std::uint8_t>& mask) {
    check_pair(pred, gt);
    check_mask(pred, mask);
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < pred.pixel_count(); ++p) {
        if (!mask[p]) continue;
        const auto a = pred.pixel(p), b = gt.pixel(p);
        for (int c = 0; c < pred.channels; ++c) sum += (a[c] - b[c]) * (a[c] - b[c]);
        n += static_cast<std::size_t>(pred.channels);
    }
    return sum / static_cast<double>(n);
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

FeatureMap<double> ssim_map(const FeatureMap<double>& pred, const FeatureMap<double>& gt) {
    check_pair(pred, gt);
    const std::vector<double> x = luma(pred), y = luma(gt);
    std::array<double, 2 * kRadius + 1> k{};
    for (int i = -kRadius; i <= kRadius; ++i) k[i + kRadius] = std::exp(-(i * i) / (2 * kSigma * kSigma));
    const int h = pred.height, w = pred.width;
    FeatureMap<double> out(h, w, 1);
    for (int py = 0; py < h; ++py) {
        for (int px = 0; px < w; ++px) {
            double ws = 0, mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int dy = -kRadius; dy <= kRadius; ++dy) {
                const int yy = py + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -kRadius; dx <= kRadius; ++dx) {
                    const int xx = px + dx;
                    if (xx < 0 || xx >= w) continue;
                    const double wt = k[dy + kRadius] * k[dx + kRadius];
                    const std::size_t q = static_cast<std::size_t>(yy) * w + xx;
                    ws += wt;
                    mx += wt * x[q];
                    my += wt * y[q];
                    sxx += wt * x[q] * x[q];
                    syy += wt * y[q] * y[q];
                    sxy += wt * x[q] * y[q];
                }
            }
            mx /= ws;
            my /= ws;
            const double vx = std::max(0.0, sxx / ws - mx * mx);
            const double vy = std::max(0.0, syy / ws - my * my);
            const double cxy = sxy / ws - mx * my;
            out.at(py, px, 0) = ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
                                ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        }
    }
    return out;
}

ImageQuality masked_psnr_ssim(const FeatureMap<double>& pred, const FeatureMap<double>& gt,
                              const std::vector<std::uint8_t>& mask) {
    ImageQuality q;
    q.psnr = psnr_from_mse(masked_mse(pred, gt, mask));
    const FeatureMap<double> s = ssim_map(pred, gt);
    double sum = 0;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        sum += s.data[p];
        ++q.pixels;
    }
    q.ssim = sum / static_cast<double>(q.pixels);
    return q;
}

}  // namespace splatfeat::geo
