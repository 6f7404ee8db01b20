#include <algorithm>
#include <cctype>

#include "saia/preprocess.hpp"
#include "saia/text.hpp"

namespace saia {

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(roi_.begin(), roi_.end(), 1)); }

GrayImage to_gray(const RgbImage& img) {
    GrayImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            // Integer BT.601 luma, rounded.
            const int v = 299 * img.at(x, y, 0) + 587 * img.at(x, y, 1) + 114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>((v + 500) / 1000);
        }
    }
    return out;
}

namespace {

struct Netpbm {
    int width = 0;
    int height = 0;
    std::size_t offset = 0;
};

Netpbm parse_header(const std::string& bytes, const char* magic) {
    if (bytes.size() < 2 || bytes.compare(0, 2, magic) != 0) {
        throw Error(ErrorKind::MalformedImage, std::string("expected ") + magic + " header");
    }
    std::size_t pos = 2;
    auto next_int = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        auto v = parse_int(std::string_view(bytes).substr(start, pos - start));
        if (!v || *v <= 0) throw Error(ErrorKind::MalformedImage, "bad netpbm header field");
        return *v;
    };
    Netpbm h;
    h.width = static_cast<int>(next_int());
    h.height = static_cast<int>(next_int());
    if (next_int() != 255) throw Error(ErrorKind::MalformedImage, "only maxval 255 is supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw Error(ErrorKind::MalformedImage, "missing separator before pixel data");
    }
    h.offset = pos + 1;
    return h;
}

template <int C>
Image<C> parse_netpbm(const std::string& bytes, const char* magic) {
    const auto h = parse_header(bytes, magic);
    const std::size_t need = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * C;
    if (bytes.size() - h.offset < need) throw Error(ErrorKind::MalformedImage, "truncated pixel data");
    std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(h.offset),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(h.offset + need));
    return Image<C>(h.width, h.height, std::move(data));
}

template <int C>
std::string encode_netpbm(const Image<C>& img, const char* magic) {
    std::string out = std::string(magic) + "\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                      "\n255\n";
    out.append(img.data().begin(), img.data().end());
    return out;
}

}  // namespace

GrayImage parse_pgm(const std::string& bytes) { return parse_netpbm<1>(bytes, "P5"); }
RgbImage parse_ppm(const std::string& bytes) { return parse_netpbm<3>(bytes, "P6"); }
GrayImage load_pgm(const std::string& path) { return parse_pgm(read_file(path)); }
RgbImage load_ppm(const std::string& path) { return parse_ppm(read_file(path)); }
std::string encode_pgm(const GrayImage& img) { return encode_netpbm(img, "P5"); }
std::string encode_ppm(const RgbImage& img) { return encode_netpbm(img, "P6"); }

namespace {

constexpr std::pair<AugmentOp, const char*> kOpNames[] = {
    {AugmentOp::Rot90, "rot90"},           {AugmentOp::Rot180, "rot180"},
    {AugmentOp::Rot270, "rot270"},         {AugmentOp::HFlip, "hflip"},
    {AugmentOp::Rot90HFlip, "rot90+hflip"}, {AugmentOp::Rot180HFlip, "rot180+hflip"},
    {AugmentOp::Rot270HFlip, "rot270+hflip"},
};

}  // namespace

AugmentOp parse_augment_op(const std::string& name) {
    for (const auto& [op, n] : kOpNames) {
        if (name == n) return op;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown augmentation op '" + name + "'");
}

std::string augment_op_name(AugmentOp op) {
    for (const auto& [o, n] : kOpNames) {
        if (o == op) return n;
    }
    return "?";
}

}  // namespace saia
