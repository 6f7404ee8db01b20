#include "saia/preprocess.hpp"

namespace saia {

std::vector<double> FeatureBundle::concat() const {
    std::vector<double> out(structural.begin(), structural.end());
    out.insert(out.end(), color.begin(), color.end());
    out.insert(out.end(), texture.begin(), texture.end());
    return out;
}

FeatureBundle extract_features(const RgbImage& img, const FeatureConfig& cfg) {
    const GrayImage gray = to_gray(img);
    const auto seg = otsu_threshold(gray, cfg.polarity);
    FeatureBundle out;
    out.structural = shape_features(seg.mask, gray).values();
    out.color = luv_histogram(img, &seg.mask);
    out.texture = lbp_histogram(gray, cfg.lbp_points, cfg.lbp_radius, cfg.lbp_mapping);
    return out;
}

}  // namespace saia
