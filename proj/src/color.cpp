#include <cmath>

#include "saia/preprocess.hpp"

namespace saia {

namespace {

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

double linearize(std::uint8_t c) {
    const double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

int bin_of(double value, const double (&range)[2]) {
    const double t = (value - range[0]) / (range[1] - range[0]);
    const int b = static_cast<int>(std::floor(t * kLuvBins));
    return b < 0 ? 0 : (b >= kLuvBins ? kLuvBins - 1 : b);
}

}  // namespace

std::array<double, 3> srgb_to_luv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = linearize(r8);
    const double g = linearize(g8);
    const double b = linearize(b8);
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    const double yr = y / kWhiteY;
    constexpr double kEps = 216.0 / 24389.0;
    constexpr double kKappa = 24389.0 / 27.0;
    const double l = yr > kEps ? 116.0 * std::cbrt(yr) - 16.0 : kKappa * yr;

    const double denom = x + 15.0 * y + 3.0 * z;
    if (denom <= 0.0) return {l, 0.0, 0.0};
    const double white_denom = kWhiteX + 15.0 * kWhiteY + 3.0 * kWhiteZ;
    const double un = 4.0 * kWhiteX / white_denom;
    const double vn = 9.0 * kWhiteY / white_denom;
    const double u = 13.0 * l * (4.0 * x / denom - un);
    const double v = 13.0 * l * (9.0 * y / denom - vn);
    return {l, u, v};
}

std::vector<double> luv_histogram(const RgbImage& img, const Mask* mask) {
    if (mask && (mask->width() != img.width() || mask->height() != img.height())) {
        throw Error(ErrorKind::ArityMismatch, "mask dimensions differ from image");
    }
    std::vector<double> hist(3 * kLuvBins, 0.0);
    std::size_t n = 0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (mask && !mask->at(x, y)) continue;
            const auto luv = srgb_to_luv(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
            hist[bin_of(luv[0], kLRange)] += 1.0;
            hist[kLuvBins + bin_of(luv[1], kURange)] += 1.0;
            hist[2 * kLuvBins + bin_of(luv[2], kVRange)] += 1.0;
            ++n;
        }
    }
    if (n == 0) throw Error(ErrorKind::EmptyMask, "no pixels selected for the color histogram");
    for (double& v : hist) v /= static_cast<double>(n);
    return hist;
}

}  // namespace saia
