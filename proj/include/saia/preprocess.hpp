#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "saia/error.hpp"

namespace saia {

/// Row-major 8-bit image with C interleaved channels.
template <int C>
class Image {
public:
    static constexpr int kChannels = C;

    Image() = default;
    Image(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}
    Image(int width, int height, std::vector<std::uint8_t> data) : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height)) {
            throw Error(ErrorKind::MalformedImage, "pixel buffer does not match dimensions");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }

    std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    bool operator==(const Image&) const = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 0 || h < 0) throw Error(ErrorKind::MalformedImage, "negative image dimensions");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * C;
    }
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * C +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

using GrayImage = Image<1>;
using RgbImage = Image<3>;

/// Region-of-interest flags, one per pixel.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, bool fill = false)
        : width_(width), height_(height), roi_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool in_bounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool at(int x, int y) const { return roi_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { roi_[static_cast<std::size_t>(y) * width_ + x] = v; }
    /// False outside the image.
    bool get(int x, int y) const { return in_bounds(x, y) && at(x, y); }
    std::size_t count() const;

    bool operator==(const Mask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<char> roi_;
};

GrayImage to_gray(const RgbImage& img);

GrayImage load_pgm(const std::string& path);
RgbImage load_ppm(const std::string& path);
GrayImage parse_pgm(const std::string& bytes);
RgbImage parse_ppm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img);
std::string encode_ppm(const RgbImage& img);

// Segmentation

enum class Polarity { DarkRoi, BrightRoi };

struct OtsuResult {
    int threshold = 0;
    Mask mask;
};

std::array<std::uint64_t, 256> intensity_histogram(const GrayImage& img);

/// Maximizes between-class variance of the split {<= t} / {> t}; smallest t on ties.
/// DarkRoi marks pixels <= t, BrightRoi pixels > t.
OtsuResult otsu_threshold(const GrayImage& img, Polarity polarity = Polarity::DarkRoi);

/// Pixels of the largest 8-connected component (first in raster order on ties).
Mask largest_component(const Mask& mask);

// Color

inline constexpr int kLuvBins = 255;
inline constexpr double kLRange[2] = {0.0, 100.0};
inline constexpr double kURange[2] = {-134.0, 220.0};
inline constexpr double kVRange[2] = {-140.0, 122.0};

/// sRGB (D65) to CIELUV.
std::array<double, 3> srgb_to_luv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// 3 x 255 normalized histograms (L, then u*, then v*), out-of-range values clamped.
std::vector<double> luv_histogram(const RgbImage& img, const Mask* mask = nullptr);

// Texture

enum class LbpMapping { None, Uniform, RotationInvariantUniform };

std::size_t lbp_bin_count(int points, LbpMapping mapping);

/// Circular LBP with bilinear sampling; pixels within `radius` of the border are skipped.
/// A neighbor bit is set when it exceeds the center by more than 1e-6.
std::vector<double> lbp_histogram(const GrayImage& img, int points, double radius, LbpMapping mapping);

/// Histogram bin of a raw P-bit pattern under `mapping`.
std::size_t lbp_map(std::uint32_t pattern, int points, LbpMapping mapping);

// Shape

struct ShapeFeatures {
    double asymmetry = 0.0;
    double eccentricity = 0.0;
    double perimeter = 0.0;
    double max_intensity = 0.0;
    double min_intensity = 0.0;
    double mean_intensity = 0.0;
    double solidity = 0.0;
    double compactness = 0.0;
    double circularity = 0.0;

    std::array<double, 9> values() const {
        return {asymmetry, eccentricity, perimeter, max_intensity, min_intensity, mean_intensity,
                solidity, compactness, circularity};
    }
};

/// Boundary length with weighted border-pixel counting: straight runs count 1,
/// diagonal steps sqrt(2), corners (1 + sqrt(2)) / 2.
double region_perimeter(const Mask& region);

/// Area of the convex hull of all pixel corners.
double convex_hull_area(const Mask& region);

/// Computed on the largest connected ROI component.
ShapeFeatures shape_features(const Mask& mask, const GrayImage& gray);

// Augmentation

enum class AugmentOp { Rot90, Rot180, Rot270, HFlip, Rot90HFlip, Rot180HFlip, Rot270HFlip };

AugmentOp parse_augment_op(const std::string& name);
std::string augment_op_name(AugmentOp op);

/// Counter-clockwise quarter turns.
template <int C>
Image<C> rotate90(const Image<C>& img) {
    Image<C> out(img.height(), img.width());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            for (int c = 0; c < C; ++c) out.at(x, y, c) = img.at(img.width() - 1 - y, x, c);
        }
    }
    return out;
}

template <int C>
Image<C> hflip(const Image<C>& img) {
    Image<C> out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < C; ++c) out.at(x, y, c) = img.at(img.width() - 1 - x, y, c);
        }
    }
    return out;
}

template <int C>
Image<C> apply_augment(const Image<C>& img, AugmentOp op) {
    int turns = 0;
    bool flip = false;
    switch (op) {
        case AugmentOp::Rot90: turns = 1; break;
        case AugmentOp::Rot180: turns = 2; break;
        case AugmentOp::Rot270: turns = 3; break;
        case AugmentOp::HFlip: flip = true; break;
        case AugmentOp::Rot90HFlip: turns = 1; flip = true; break;
        case AugmentOp::Rot180HFlip: turns = 2; flip = true; break;
        case AugmentOp::Rot270HFlip: turns = 3; flip = true; break;
    }
    Image<C> out = img;
    for (int t = 0; t < turns; ++t) out = rotate90(out);
    return flip ? hflip(out) : out;
}

/// One output per op, in order. Combined ops rotate first, then flip.
template <int C>
std::vector<Image<C>> augment_image(const Image<C>& img, const std::vector<AugmentOp>& ops) {
    std::vector<Image<C>> out;
    out.reserve(ops.size());
    for (auto op : ops) out.push_back(apply_augment(img, op));
    return out;
}

// Feature bundle

struct FeatureConfig {
    int lbp_points = 24;
    double lbp_radius = 3.0;
    LbpMapping lbp_mapping = LbpMapping::RotationInvariantUniform;
    Polarity polarity = Polarity::DarkRoi;
};

struct FeatureBundle {
    std::array<double, 9> structural{};
    std::vector<double> color;
    std::vector<double> texture;

    /// structural, then color, then texture.
    std::vector<double> concat() const;
};

/// Otsu mask, then shape, LUV and LBP features of one image.
FeatureBundle extract_features(const RgbImage& img, const FeatureConfig& cfg = {});

LbpMapping parse_lbp_mapping(const std::string& name);

}  // namespace saia
