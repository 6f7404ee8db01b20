#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "saia/preprocess.hpp"
#include "saia/random.hpp"
#include "test_support.hpp"

using namespace saia;

namespace {

using i128 = __int128;

// Exhaustive Otsu: exact rational comparison of between-class variance.
int otsu_oracle(const GrayImage& img) {
    std::array<std::int64_t, 256> h{};
    for (auto v : img.data()) ++h[v];
    const std::int64_t n = static_cast<std::int64_t>(img.pixel_count());
    std::int64_t total = 0;
    for (int i = 0; i < 256; ++i) total += i * h[i];
    int best = -1;
    i128 best_num = 0;
    i128 best_den = 1;
    for (int t = 0; t < 256; ++t) {
        std::int64_t n0 = 0, s0 = 0;
        for (int i = 0; i <= t; ++i) {
            n0 += h[i];
            s0 += i * h[i];
        }
        const std::int64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        // mu0 - mu1 = (s0*n - total*n0) / (n0*n1); variance ~ n0*n1*(mu0-mu1)^2
        const i128 d = static_cast<i128>(s0) * n - static_cast<i128>(total) * n0;
        const i128 num = d * d;
        const i128 den = static_cast<i128>(n0) * n1;
        if (best < 0 || num * best_den > best_num * den) {
            best = t;
            best_num = num;
            best_den = den;
        }
    }
    return best;
}

GrayImage random_gray(Rng& rng, int w, int h) {
    GrayImage img(w, h);
    const int modes = 1 + static_cast<int>(rng.index(3));
    std::vector<double> centers;
    for (int i = 0; i < modes; ++i) centers.push_back(40.0 + 180.0 * rng.uniform());
    const double spread = 5.0 + 40.0 * rng.uniform();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = centers[rng.index(centers.size())];
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(c + spread * rng.normal()), 0L, 255L));
        }
    }
    return img;
}

Mask disc_mask(int size, double cx, double cy, double r) {
    Mask m(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) m.set(x, y, (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r);
    }
    return m;
}

// Smooth texture from a few low-frequency sinusoids.
GrayImage smooth_texture(int size, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(size, size);
    double fx[3], fy[3], ph[3];
    for (int k = 0; k < 3; ++k) {
        fx[k] = 0.05 + 0.2 * rng.uniform();
        fy[k] = 0.05 + 0.2 * rng.uniform();
        ph[k] = 6.28 * rng.uniform();
    }
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = 128.0;
            for (int k = 0; k < 3; ++k) v += 35.0 * std::sin(fx[k] * x + fy[k] * y + ph[k]);
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return img;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Convex hull area by brute force: an edge (a, b) is on the hull iff every point
// lies on its left or on the segment line; the hull polygon is then traced.
double brute_hull_area(const Mask& m) {
    std::vector<std::pair<long, long>> pts;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            for (int dy = 0; dy <= 1; ++dy) {
                for (int dx = 0; dx <= 1; ++dx) pts.push_back({x + dx, y + dy});
            }
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto crs = [](auto o, auto a, auto b) {
        return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    // Hull vertices: points not strictly inside any triangle and not between two others on an edge.
    double twice = 0.0;
    for (const auto& a : pts) {
        for (const auto& b : pts) {
            if (a == b) continue;
            bool edge = true;
            for (const auto& c : pts) {
                const long v = crs(a, b, c);
                if (v < 0) {
                    edge = false;
                    break;
                }
                // Collinear points beyond the segment mean (a, b) is not a maximal edge.
                if (v == 0) {
                    const long dot_a = (c.first - a.first) * (b.first - a.first) + (c.second - a.second) * (b.second - a.second);
                    const long len = (b.first - a.first) * (b.first - a.first) + (b.second - a.second) * (b.second - a.second);
                    if (dot_a < 0 || dot_a > len) {
                        edge = false;
                        break;
                    }
                }
            }
            if (edge) twice += static_cast<double>(a.first * b.second - b.first * a.second);
        }
    }
    return std::abs(twice) / 2.0;
}

}  // namespace

TEST_CASE("otsu examples") {
    CHECK_THROWS_WITH_AS(otsu_threshold(GrayImage(8, 8, 77)), doctest::Contains("DegenerateHistogram"), Error);

    GrayImage half(10, 10, 0);
    for (int y = 5; y < 10; ++y) {
        for (int x = 0; x < 10; ++x) half.at(x, y) = 255;
    }
    const auto r = otsu_threshold(half);
    CHECK(r.threshold == 0);
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 10; ++x) CHECK(r.mask.at(x, y) == (y < 5));
    }
    const auto bright = otsu_threshold(half, Polarity::BrightRoi);
    CHECK(bright.mask.at(0, 9));
    CHECK(!bright.mask.at(0, 0));
}

TEST_CASE("otsu equals the exhaustive scan on random images") {
    Rng rng(99);
    for (int i = 0; i < 100; ++i) {
        const auto img = random_gray(rng, 8 + static_cast<int>(rng.index(40)), 8 + static_cast<int>(rng.index(40)));
        const auto r = otsu_threshold(img);
        CHECK(r.threshold == otsu_oracle(img));
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) REQUIRE(r.mask.at(x, y) == (img.at(x, y) <= r.threshold));
        }
    }
}

TEST_CASE("otsu is invariant under pixel permutations") {
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        auto img = random_gray(rng, 30, 20);
        auto pixels = img.data();
        rng.shuffle(std::span<std::uint8_t>(pixels));
        CHECK(otsu_threshold(img).threshold == otsu_threshold(GrayImage(30, 20, pixels)).threshold);
    }
}

TEST_CASE("luv conversion and histograms") {
    const auto black = srgb_to_luv(0, 0, 0);
    CHECK(black[0] == 0.0);
    const auto white = srgb_to_luv(255, 255, 255);
    CHECK(white[0] == doctest::Approx(100.0).epsilon(1e-4));
    CHECK(std::abs(white[1]) < 0.05);
    CHECK(std::abs(white[2]) < 0.05);
    // Reference sRGB red in CIELUV (D65): L 53.24, u 175.01, v 37.76.
    const auto red = srgb_to_luv(255, 0, 0);
    CHECK(red[0] == doctest::Approx(53.24).epsilon(1e-3));
    CHECK(red[1] == doctest::Approx(175.01).epsilon(1e-3));
    CHECK(red[2] == doctest::Approx(37.76).epsilon(2e-3));

    const auto hb = luv_histogram(RgbImage(6, 4, 0));
    REQUIRE(hb.size() == 765);
    CHECK(hb[0] == 1.0);

    RgbImage r(5, 5), g(5, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            r.at(x, y, 0) = 255;
            g.at(x, y, 1) = 255;
        }
    }
    const auto hr = luv_histogram(r);
    const auto hg = luv_histogram(g);
    CHECK(!std::equal(hr.begin() + 255, hr.end(), hg.begin() + 255));
    CHECK(hr == luv_histogram(r));

    Rng rng(3);
    RgbImage noise(17, 13);
    for (int y = 0; y < 13; ++y) {
        for (int x = 0; x < 17; ++x) {
            for (int c = 0; c < 3; ++c) noise.at(x, y, c) = static_cast<std::uint8_t>(rng.index(256));
        }
    }
    Mask m(17, 13);
    m.set(3, 4, true);
    m.set(9, 9, true);
    for (const auto& h : {luv_histogram(noise), luv_histogram(noise, &m)}) {
        for (int c = 0; c < 3; ++c) {
            CHECK(std::abs(std::accumulate(h.begin() + 255 * c, h.begin() + 255 * (c + 1), 0.0) - 1.0) < 1e-9);
        }
    }
    Mask empty(17, 13);
    CHECK_THROWS_WITH_AS(luv_histogram(noise, &empty), doctest::Contains("EmptyMask"), Error);
}

TEST_CASE("lbp mappings") {
    CHECK(lbp_bin_count(24, LbpMapping::RotationInvariantUniform) == 26);
    CHECK(lbp_bin_count(8, LbpMapping::RotationInvariantUniform) == 10);
    CHECK(lbp_bin_count(8, LbpMapping::Uniform) == 59);
    CHECK(lbp_bin_count(8, LbpMapping::None) == 256);

    // Every uniform pattern gets its own bin; all others share the last one.
    std::set<std::size_t> uniform_bins;
    int uniform_count = 0;
    for (std::uint32_t p = 0; p < 256; ++p) {
        int transitions = 0;
        for (int b = 0; b < 8; ++b) transitions += ((p >> b) & 1u) != ((p >> ((b + 1) % 8)) & 1u);
        const auto u2 = lbp_map(p, 8, LbpMapping::Uniform);
        const auto ri = lbp_map(p, 8, LbpMapping::RotationInvariantUniform);
        if (transitions <= 2) {
            ++uniform_count;
            uniform_bins.insert(u2);
            CHECK(ri == static_cast<std::size_t>(std::popcount(p)));
        } else {
            CHECK(u2 == 58);
            CHECK(ri == 9);
        }
        CHECK(lbp_map(p, 8, LbpMapping::None) == p);
    }
    CHECK(uniform_count == 58);
    CHECK(uniform_bins.size() == 58);
    CHECK(*uniform_bins.rbegin() == 57);
}

TEST_CASE("lbp histograms") {
    const auto flat = lbp_histogram(GrayImage(20, 20, 90), 24, 3.0, LbpMapping::RotationInvariantUniform);
    REQUIRE(flat.size() == 26);
    CHECK(flat[0] == 1.0);
    CHECK(lbp_histogram(GrayImage(20, 20, 90), 8, 1.0, LbpMapping::RotationInvariantUniform)[0] == 1.0);

    CHECK_THROWS_WITH_AS(lbp_histogram(GrayImage(7, 20), 24, 3.0, LbpMapping::RotationInvariantUniform),
                         doctest::Contains("ImageTooSmall"), Error);

    Rng rng(8);
    for (auto mapping : {LbpMapping::None, LbpMapping::Uniform, LbpMapping::RotationInvariantUniform}) {
        const auto img = random_gray(rng, 32, 24);
        CHECK(std::abs(sum(lbp_histogram(img, 8, 1.0, mapping)) - 1.0) < 1e-9);
        CHECK(std::abs(sum(lbp_histogram(img, 16, 2.0, mapping)) - 1.0) < 1e-9);
    }

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto img = smooth_texture(48, seed);
        const auto a = lbp_histogram(img, 24, 3.0, LbpMapping::RotationInvariantUniform);
        const auto b = lbp_histogram(rotate90(img), 24, 3.0, LbpMapping::RotationInvariantUniform);
        double l1 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(a[i] - b[i]);
        CHECK(l1 <= 0.02);
    }
}

TEST_CASE("shape features of a disc and a line") {
    const auto disc = disc_mask(80, 40.0, 40.0, 30.0);
    const auto f = shape_features(disc, GrayImage(80, 80, 10));
    CHECK(f.eccentricity < 0.1);
    CHECK(f.asymmetry < 0.05);
    CHECK(f.circularity >= 0.85);
    CHECK(f.circularity <= 1.1);
    CHECK(f.solidity > 0.95);
    CHECK(f.solidity <= 1.0);
    CHECK(f.max_intensity == 10.0);
    CHECK(f.mean_intensity == 10.0);

    Mask line(40, 5);
    for (int x = 5; x < 35; ++x) line.set(x, 2, true);
    CHECK(shape_features(line, GrayImage(40, 5)).eccentricity >= 0.99);

    CHECK_THROWS_WITH_AS(shape_features(Mask(4, 4), GrayImage(4, 4)), doctest::Contains("EmptyMask"), Error);
}

TEST_CASE("perimeter of simple shapes") {
    Mask square(14, 14);
    for (int y = 2; y < 12; ++y) {
        for (int x = 2; x < 12; ++x) square.set(x, y, true);
    }
    CHECK(region_perimeter(square) == doctest::Approx(36.0));
    CHECK(convex_hull_area(square) == 100.0);

    // The weighted count overestimates a large disc's circumference by a few percent.
    const auto disc = disc_mask(220, 110.0, 110.0, 100.0);
    const double ratio = region_perimeter(disc) / (2.0 * std::numbers::pi * 100.0);
    CHECK(ratio > 1.0);
    CHECK(ratio < 1.08);
}

TEST_CASE("solidity matches a brute-force hull") {
    Mask plus(15, 15);
    for (int i = 3; i < 12; ++i) {
        for (int j = 6; j < 9; ++j) {
            plus.set(i, j, true);
            plus.set(j, i, true);
        }
    }
    const double area = static_cast<double>(plus.count());
    const double expected = area / brute_hull_area(plus);
    CHECK(std::abs(shape_features(plus, GrayImage(15, 15)).solidity - expected) < 1e-6);

    Rng rng(17);
    for (int t = 0; t < 10; ++t) {
        Mask blob(12, 12);
        for (int k = 0; k < 4; ++k) {
            const int x0 = static_cast<int>(rng.index(8));
            const int y0 = static_cast<int>(rng.index(8));
            for (int y = y0; y < y0 + 4; ++y) {
                for (int x = x0; x < x0 + 1 + static_cast<int>(rng.index(4)); ++x) blob.set(x, y, true);
            }
        }
        const auto region = largest_component(blob);
        CHECK(convex_hull_area(region) == doctest::Approx(brute_hull_area(region)).epsilon(1e-12));
    }
}

TEST_CASE("circularity and compactness are reciprocal") {
    Rng rng(23);
    for (int t = 0; t < 50; ++t) {
        const int size = 20 + static_cast<int>(rng.index(30));
        const auto m = disc_mask(size, size * rng.uniform(), size * rng.uniform(), 2.0 + size * 0.4 * rng.uniform());
        if (m.count() == 0) continue;
        const auto f = shape_features(m, GrayImage(size, size));
        CHECK(std::abs(f.circularity * f.compactness - 1.0) < 1e-9);
    }
    Mask dot(5, 5);
    dot.set(2, 2, true);
    const auto f = shape_features(dot, GrayImage(5, 5));
    CHECK(std::abs(f.circularity * f.compactness - 1.0) < 1e-9);
}

TEST_CASE("largest component selection") {
    Mask m(10, 10);
    m.set(0, 0, true);
    for (int x = 4; x < 8; ++x) m.set(x, 5, true);
    m.set(8, 6, true);  // diagonal neighbor joins under 8-connectivity
    const auto lc = largest_component(m);
    CHECK(lc.count() == 5);
    CHECK(!lc.at(0, 0));
    CHECK(lc.at(8, 6));
}

TEST_CASE("augmentation index maps") {
    // 2 wide, 3 tall:  a b / c d / e f
    GrayImage img(2, 3, std::vector<std::uint8_t>{'a', 'b', 'c', 'd', 'e', 'f'});
    auto pixels = [](const GrayImage& g) { return std::string(g.data().begin(), g.data().end()); };

    const auto r90 = apply_augment(img, AugmentOp::Rot90);
    CHECK(r90.width() == 3);
    CHECK(r90.height() == 2);
    CHECK(pixels(r90) == "bdface");
    CHECK(pixels(apply_augment(img, AugmentOp::Rot180)) == "fedcba");
    CHECK(pixels(apply_augment(img, AugmentOp::Rot270)) == "ecafdb");
    CHECK(pixels(apply_augment(img, AugmentOp::HFlip)) == "badcfe");
    CHECK(pixels(apply_augment(img, AugmentOp::Rot90HFlip)) == "fdbeca");
    CHECK(pixels(apply_augment(img, AugmentOp::Rot180HFlip)) == "efcdab");
    CHECK(pixels(apply_augment(img, AugmentOp::Rot270HFlip)) == "acebdf");

    CHECK(apply_augment(apply_augment(img, AugmentOp::Rot180), AugmentOp::Rot180) == img);
    CHECK(hflip(hflip(img)) == img);
    CHECK(rotate90(rotate90(rotate90(rotate90(img)))) == img);

    const auto all = augment_image(img, {AugmentOp::Rot90, AugmentOp::HFlip, AugmentOp::Rot270HFlip});
    CHECK(all.size() == 3);
    CHECK(parse_augment_op(augment_op_name(AugmentOp::Rot180HFlip)) == AugmentOp::Rot180HFlip);
    CHECK_THROWS_AS(parse_augment_op("rot45"), Error);
}

TEST_CASE("netpbm round trip") {
    Rng rng(4);
    RgbImage rgb(7, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 7; ++x) {
            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = static_cast<std::uint8_t>(rng.index(256));
        }
    }
    CHECK(parse_ppm(encode_ppm(rgb)) == rgb);
    const auto gray = to_gray(rgb);
    CHECK(parse_pgm(encode_pgm(gray)) == gray);
    CHECK(parse_pgm(std::string("P5\n# comment\n2 1\n255\n") + "\x01\x02") == GrayImage(2, 1, {1, 2}));
    CHECK_THROWS_WITH_AS(parse_pgm("P5\n2 2\n255\n\x01"), doctest::Contains("MalformedImage"), Error);
    CHECK_THROWS_WITH_AS(parse_ppm(encode_pgm(gray)), doctest::Contains("MalformedImage"), Error);
    CHECK(to_gray(RgbImage(1, 1, 255)).at(0, 0) == 255);
}

TEST_CASE("feature bundle layout and determinism") {
    RgbImage img(64, 64);
    Rng rng(6);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const bool lesion = (x - 30) * (x - 30) + (y - 34) * (y - 34) < 300;
            const int base = lesion ? 70 : 190;
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(base + c * 10 + static_cast<int>(rng.index(15)), 0, 255));
            }
        }
    }
    const auto a = extract_features(img);
    const auto b = extract_features(img);
    CHECK(a.structural == b.structural);
    CHECK(a.color == b.color);
    CHECK(a.texture == b.texture);
    CHECK(a.color.size() == 765);
    CHECK(a.texture.size() == 26);
    CHECK(a.concat().size() == 9 + 765 + 26);
    CHECK(std::abs(sum(a.texture) - 1.0) < 1e-9);
    CHECK(a.structural[5] < 100.0);  // mean intensity of the dark lesion
    CHECK(a.structural[1] < 0.3);
}
