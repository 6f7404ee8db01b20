#include <bit>
#include <cmath>
#include <numbers>

#include "saia/preprocess.hpp"

namespace saia {

namespace {

constexpr double kBitMargin = 1e-6;

std::uint32_t rotate_right(std::uint32_t v, int k, int p) {
    const std::uint32_t full = p == 32 ? ~0u : ((1u << p) - 1u);
    k %= p;
    if (k == 0) return v;
    return ((v >> k) | (v << (p - k))) & full;
}

int transitions(std::uint32_t v, int p) {
    return std::popcount(v ^ rotate_right(v, 1, p));
}

}  // namespace

std::size_t lbp_bin_count(int points, LbpMapping mapping) {
    switch (mapping) {
        case LbpMapping::None: return std::size_t{1} << points;
        case LbpMapping::Uniform: return static_cast<std::size_t>(points * (points - 1) + 3);
        case LbpMapping::RotationInvariantUniform: return static_cast<std::size_t>(points + 2);
    }
    return 0;
}

std::size_t lbp_map(std::uint32_t pattern, int p, LbpMapping mapping) {
    if (mapping == LbpMapping::None) return pattern;
    const bool uniform = transitions(pattern, p) <= 2;
    const int ones = std::popcount(pattern);
    if (mapping == LbpMapping::RotationInvariantUniform) return uniform ? ones : p + 1;

    if (!uniform) return static_cast<std::size_t>(p * (p - 1) + 2);
    if (ones == 0) return 0;
    if (ones == p) return 1;
    // A single run of `ones` set bits; locate the rotation that brings it to bit 0.
    const std::uint32_t run = (1u << ones) - 1u;
    int start = 0;
    while (rotate_right(pattern, start, p) != run) ++start;
    return static_cast<std::size_t>(2 + (ones - 1) * p + start);
}

std::vector<double> lbp_histogram(const GrayImage& img, int points, double radius, LbpMapping mapping) {
    if (points < 1 || points > 31 || !(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "bad LBP parameters");
    if (mapping == LbpMapping::None && points > 20) {
        throw Error(ErrorKind::InvalidArgument, "unmapped LBP supports at most 20 points");
    }
    const int border = static_cast<int>(std::ceil(radius));
    if (img.width() <= 2 * border + 1 || img.height() <= 2 * border + 1) {
        throw Error(ErrorKind::ImageTooSmall, "image must exceed 2R+1 pixels in both dimensions");
    }

    std::vector<double> dx(points), dy(points);
    for (int p = 0; p < points; ++p) {
        const double a = 2.0 * std::numbers::pi * p / points;
        dx[p] = radius * std::cos(a);
        dy[p] = -radius * std::sin(a);
        // Snap offsets that are integral up to rounding so sampling stays exact.
        if (std::abs(dx[p] - std::round(dx[p])) < 1e-9) dx[p] = std::round(dx[p]);
        if (std::abs(dy[p] - std::round(dy[p])) < 1e-9) dy[p] = std::round(dy[p]);
    }

    std::vector<double> hist(lbp_bin_count(points, mapping), 0.0);
    std::size_t n = 0;
    for (int y = border; y < img.height() - border; ++y) {
        for (int x = border; x < img.width() - border; ++x) {
            const double center = img.at(x, y);
            std::uint32_t pattern = 0;
            for (int p = 0; p < points; ++p) {
                const double sx = x + dx[p];
                const double sy = y + dy[p];
                const int x0 = static_cast<int>(std::floor(sx));
                const int y0 = static_cast<int>(std::floor(sy));
                const double fx = sx - x0;
                const double fy = sy - y0;
                const int x1 = fx > 0.0 ? x0 + 1 : x0;
                const int y1 = fy > 0.0 ? y0 + 1 : y0;
                const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
                const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
                const double value = (1.0 - fy) * top + fy * bottom;
                if (value - center > kBitMargin) pattern |= 1u << p;
            }
            hist[lbp_map(pattern, points, mapping)] += 1.0;
            ++n;
        }
    }
    for (double& v : hist) v /= static_cast<double>(n);
    return hist;
}

LbpMapping parse_lbp_mapping(const std::string& name) {
    if (name == "none") return LbpMapping::None;
    if (name == "uniform" || name == "u2") return LbpMapping::Uniform;
    if (name == "riu2" || name == "rotation-invariant-uniform") return LbpMapping::RotationInvariantUniform;
    throw Error(ErrorKind::InvalidArgument, "unknown LBP mapping '" + name + "'");
}

}  // namespace saia
