#include <algorithm>
#include <cmath>
#include <numbers>

#include "saia/preprocess.hpp"

namespace saia {

namespace {

Mask border_of(const Mask& region) {
    Mask border(region.width(), region.height());
    for (int y = 0; y < region.height(); ++y) {
        for (int x = 0; x < region.width(); ++x) {
            if (!region.at(x, y)) continue;
            const bool interior =
                region.get(x - 1, y) && region.get(x + 1, y) && region.get(x, y - 1) && region.get(x, y + 1);
            border.set(x, y, !interior);
        }
    }
    return border;
}

double code_weight(int code) {
    switch (code) {
        case 5: case 7: case 15: case 17: case 25: case 27: return 1.0;
        case 21: case 33: return std::numbers::sqrt2;
        case 13: case 23: return (1.0 + std::numbers::sqrt2) / 2.0;
        default: return 0.0;
    }
}

std::int64_t cross(std::pair<std::int64_t, std::int64_t> o, std::pair<std::int64_t, std::int64_t> a,
                   std::pair<std::int64_t, std::int64_t> b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

}  // namespace

double region_perimeter(const Mask& region) {
    const Mask border = border_of(region);
    double total = 0.0;
    std::size_t border_pixels = 0;
    for (int y = 0; y < region.height(); ++y) {
        for (int x = 0; x < region.width(); ++x) {
            if (!border.at(x, y)) continue;
            ++border_pixels;
            int code = 1;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx || dy) && border.get(x + dx, y + dy)) code += (dx && dy) ? 10 : 2;
                }
            }
            total += code_weight(code);
        }
    }
    // Tiny regions (single pixels, 2-pixel runs) have no weighted boundary.
    return total > 0.0 ? total : static_cast<double>(border_pixels);
}

double convex_hull_area(const Mask& region) {
    using Pt = std::pair<std::int64_t, std::int64_t>;
    std::vector<Pt> pts;
    for (int y = 0; y < region.height(); ++y) {
        int lo = -1;
        int hi = -1;
        for (int x = 0; x < region.width(); ++x) {
            if (!region.at(x, y)) continue;
            if (lo < 0) lo = x;
            hi = x;
        }
        if (lo < 0) continue;
        pts.push_back({lo, y});
        pts.push_back({lo, y + 1});
        pts.push_back({hi + 1, y});
        pts.push_back({hi + 1, y + 1});
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    std::vector<Pt> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);

    std::int64_t twice = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        twice += a.first * b.second - b.first * a.second;
    }
    return std::abs(static_cast<double>(twice)) / 2.0;
}

ShapeFeatures shape_features(const Mask& mask, const GrayImage& gray) {
    if (mask.width() != gray.width() || mask.height() != gray.height()) {
        throw Error(ErrorKind::ArityMismatch, "mask dimensions differ from image");
    }
    const Mask region = largest_component(mask);

    double area = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    double sum_i = 0.0;
    int max_i = 0;
    int min_i = 255;
    for (int y = 0; y < region.height(); ++y) {
        for (int x = 0; x < region.width(); ++x) {
            if (!region.at(x, y)) continue;
            area += 1.0;
            sx += x;
            sy += y;
            const int v = gray.at(x, y);
            sum_i += v;
            max_i = std::max(max_i, v);
            min_i = std::min(min_i, v);
        }
    }
    const double cx = sx / area;
    const double cy = sy / area;
    double mu20 = 0.0;
    double mu02 = 0.0;
    double mu11 = 0.0;
    for (int y = 0; y < region.height(); ++y) {
        for (int x = 0; x < region.width(); ++x) {
            if (!region.at(x, y)) continue;
            mu20 += (x - cx) * (x - cx);
            mu02 += (y - cy) * (y - cy);
            mu11 += (x - cx) * (y - cy);
        }
    }
    mu20 /= area;
    mu02 /= area;
    mu11 /= area;

    ShapeFeatures f;
    const double half_sum = (mu20 + mu02) / 2.0;
    const double root = std::sqrt(((mu20 - mu02) / 2.0) * ((mu20 - mu02) / 2.0) + mu11 * mu11);
    const double l1 = half_sum + root;
    const double l2 = std::max(0.0, half_sum - root);
    f.eccentricity = l1 > 0.0 ? std::sqrt(1.0 - l2 / l1) : 0.0;

    const double theta = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
    const double axes[2][2] = {{std::cos(theta), std::sin(theta)}, {-std::sin(theta), std::cos(theta)}};
    std::size_t misses = 0;
    for (const auto& u : axes) {
        for (int y = 0; y < region.height(); ++y) {
            for (int x = 0; x < region.width(); ++x) {
                if (!region.at(x, y)) continue;
                const double dx = x - cx;
                const double dy = y - cy;
                const double along = dx * u[0] + dy * u[1];
                const double rx = cx + 2.0 * along * u[0] - dx;
                const double ry = cy + 2.0 * along * u[1] - dy;
                misses += !region.get(static_cast<int>(std::lround(rx)), static_cast<int>(std::lround(ry)));
            }
        }
    }
    f.asymmetry = static_cast<double>(misses) / (2.0 * area);

    f.perimeter = region_perimeter(region);
    f.max_intensity = max_i;
    f.min_intensity = min_i;
    f.mean_intensity = sum_i / area;
    f.solidity = area / convex_hull_area(region);
    f.compactness = f.perimeter * f.perimeter / (4.0 * std::numbers::pi * area);
    f.circularity = 4.0 * std::numbers::pi * area / (f.perimeter * f.perimeter);
    return f;
}

}  // namespace saia
