#include <vector>

#include "saia/preprocess.hpp"

namespace saia {

std::array<std::uint64_t, 256> intensity_histogram(const GrayImage& img) {
    std::array<std::uint64_t, 256> hist{};
    for (auto v : img.data()) ++hist[v];
    return hist;
}

OtsuResult otsu_threshold(const GrayImage& img, Polarity polarity) {
    if (img.empty()) throw Error(ErrorKind::InvalidArgument, "empty image");
    const auto hist = intensity_histogram(img);
    const auto n = static_cast<std::int64_t>(img.pixel_count());
    std::int64_t total = 0;
    int distinct = 0;
    for (int i = 0; i < 256; ++i) {
        total += i * static_cast<std::int64_t>(hist[i]);
        distinct += hist[i] > 0;
    }
    if (distinct < 2) throw Error(ErrorKind::DegenerateHistogram, "image has a single intensity");

    // sigma_B^2 * n^2 = (s0 * n - total * n0)^2 / (n0 * n1)
    int best_t = -1;
    double best = -1.0;
    std::int64_t n0 = 0;
    std::int64_t s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += static_cast<std::int64_t>(hist[t]);
        s0 += t * static_cast<std::int64_t>(hist[t]);
        const std::int64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double d = static_cast<double>(s0 * n - total * n0);
        const double score = d * d / (static_cast<double>(n0) * static_cast<double>(n1));
        if (score > best) {
            best = score;
            best_t = t;
        }
    }

    OtsuResult out{best_t, Mask(img.width(), img.height())};
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const bool dark = img.at(x, y) <= best_t;
            out.mask.set(x, y, polarity == Polarity::DarkRoi ? dark : !dark);
        }
    }
    return out;
}

Mask largest_component(const Mask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::size_t> sizes;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
            const int id = static_cast<int>(sizes.size());
            std::size_t size = 0;
            stack.push_back({x, y});
            label[static_cast<std::size_t>(y) * w + x] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                ++size;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (!mask.get(nx, ny)) continue;
                        auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                        if (l >= 0) continue;
                        l = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
            sizes.push_back(size);
        }
    }
    if (sizes.empty()) throw Error(ErrorKind::EmptyMask, "mask has no region of interest");
    int best = 0;
    for (int i = 1; i < static_cast<int>(sizes.size()); ++i) {
        if (sizes[i] > sizes[best]) best = i;
    }
    Mask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.set(x, y, label[static_cast<std::size_t>(y) * w + x] == best);
    }
    return out;
}

}  // namespace saia
