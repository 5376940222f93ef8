#include "genaug/augment.hpp"

#include <algorithm>
#include <cmath>

#include "genaug/errors.hpp"
#include "genaug/perturb.hpp"

namespace genaug {

const char* aug_kind_name(AugKind kind) {
    switch (kind) {
        case AugKind::Flip: return "flip";
        case AugKind::RandomSaturation: return "saturation";
        case AugKind::CropResize: return "crop_resize";
        case AugKind::Brightness: return "brightness";
        case AugKind::RandomErase: return "erase";
        case AugKind::Sobel: return "sobel";
        case AugKind::Vap: return "vap";
        case AugKind::Compose: return "compose";
    }
    return "?";
}

AugKind aug_kind_from_name(const std::string& name) {
    if (name == "flip") return AugKind::Flip;
    if (name == "saturation") return AugKind::RandomSaturation;
    if (name == "crop_resize") return AugKind::CropResize;
    if (name == "brightness") return AugKind::Brightness;
    if (name == "erase" || name == "cutout") return AugKind::RandomErase;
    if (name == "sobel") return AugKind::Sobel;
    if (name == "vap") return AugKind::Vap;
    if (name == "compose") return AugKind::Compose;
    throw ValidationError("unknown augmentation kind: '" + name + "'");
}

std::string AugmentationSpec::name() const {
    if (kind != AugKind::Compose) return aug_kind_name(kind);
    std::string out;
    for (const auto& c : children) {
        if (!out.empty()) out += "+";
        out += c.name();
    }
    return out;
}

void VapParams::validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("vap: epsilon must be > 0");
    if (!(xi > 0.0)) throw ValidationError("vap: xi must be > 0");
    if (iterations < 1) throw ValidationError("vap: iterations must be >= 1");
}

void AugmentationSpec::validate() const {
    if (!(lambda >= 0.0)) throw ValidationError("augmentation '" + name() + "': lambda must be >= 0");
    if (kind == AugKind::Compose) {
        if (children.size() < 2)
            throw ValidationError("compose: needs at least 2 children");
        for (const auto& c : children) {
            if (c.kind == AugKind::Compose)
                throw ValidationError("compose: nesting not allowed");
            c.validate();
        }
    } else if (!children.empty()) {
        throw ValidationError("augmentation '" + name() + "': children only valid for compose");
    }
    if (!(params.saturation_lo <= params.saturation_hi))
        throw ValidationError("saturation: lo > hi");
    if (!(params.crop_fraction > 0.0 && params.crop_fraction <= 1.0))
        throw ValidationError("crop_resize: fraction must be in (0,1]");
    if (!(params.brightness_delta >= 0.0))
        throw ValidationError("brightness: delta must be >= 0");
    if (!(params.erase_area_lo <= params.erase_area_hi) ||
        !(params.erase_area_lo > 0.0 && params.erase_area_hi <= 1.0))
        throw ValidationError("erase: area fractions must satisfy 0 < lo <= hi <= 1");
    if (!(params.erase_aspect_lo <= params.erase_aspect_hi) || !(params.erase_aspect_lo > 0.0))
        throw ValidationError("erase: invalid aspect range");
    if (kind == AugKind::Vap) params.vap.validate();
}

Image flip_lr(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    return out;
}

Image saturate(const Image& img, double factor) {
    if (img.channels != 3) throw ValidationError("saturation: input must have 3 channels");
    Image out(img.height, img.width, 3);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            double gray = pixel_luma(img, y, x);
            for (std::size_t c = 0; c < 3; ++c) {
                double v = gray + factor * (img.at(y, x, c) - gray);
                out.at(y, x, c) = std::min(1.0, std::max(0.0, v));
            }
        }
    return out;
}

Image random_saturation(const Image& img, RngStream& rng, double lo, double hi) {
    double s = rng.uniform(lo, hi);
    return saturate(img, s);
}

Image crop_resize(const Image& img, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ValidationError("crop_resize: fraction must be in (0,1]");
    const std::size_t H = img.height, W = img.width, C = img.channels;
    const std::size_t ch = static_cast<std::size_t>(fraction * static_cast<double>(H));
    const std::size_t cw = static_cast<std::size_t>(fraction * static_cast<double>(W));
    if (ch < 1 || cw < 1) throw ValidationError("crop_resize: crop smaller than one pixel");
    if (ch == H && cw == W) return img; // exact identity for the full-image crop
    const std::size_t y0 = (H - ch) / 2;
    const std::size_t x0 = (W - cw) / 2;

    Image out(H, W, C);
    for (std::size_t y = 0; y < H; ++y) {
        double sy = (static_cast<double>(y) + 0.5) * static_cast<double>(ch) / static_cast<double>(H) - 0.5;
        sy = std::min(std::max(sy, 0.0), static_cast<double>(ch - 1));
        std::size_t yl = static_cast<std::size_t>(sy);
        std::size_t yh = std::min(yl + 1, ch - 1);
        double fy = sy - static_cast<double>(yl);
        for (std::size_t x = 0; x < W; ++x) {
            double sx = (static_cast<double>(x) + 0.5) * static_cast<double>(cw) / static_cast<double>(W) - 0.5;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(cw - 1));
            std::size_t xl = static_cast<std::size_t>(sx);
            std::size_t xh = std::min(xl + 1, cw - 1);
            double fx = sx - static_cast<double>(xl);
            for (std::size_t c = 0; c < C; ++c) {
                double v00 = img.at(y0 + yl, x0 + xl, c);
                double v01 = img.at(y0 + yl, x0 + xh, c);
                double v10 = img.at(y0 + yh, x0 + xl, c);
                double v11 = img.at(y0 + yh, x0 + xh, c);
                double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
                out.at(y, x, c) = std::min(1.0, std::max(0.0, v));
            }
        }
    }
    return out;
}

Image brightness(const Image& img, double delta) {
    if (!(delta >= 0.0)) throw ValidationError("brightness: delta must be >= 0");
    Image out(img.height, img.width, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data.data[i] = std::min(1.0, img.data.data[i] + delta);
    return out;
}

Image random_erase(const Image& img, RngStream& rng, double area_lo, double area_hi,
                   double aspect_lo, double aspect_hi) {
    const std::size_t H = img.height, W = img.width, C = img.channels;
    if (H < 4 || W < 4) throw ValidationError("erase: image too small (needs H, W >= 4)");

    const double area = rng.uniform(area_lo, area_hi);
    const double aspect = rng.uniform(aspect_lo, aspect_hi);
    const double pixels = area * static_cast<double>(H) * static_cast<double>(W);
    std::size_t rh = static_cast<std::size_t>(std::ceil(std::sqrt(pixels * aspect)));
    std::size_t rw = static_cast<std::size_t>(std::ceil(std::sqrt(pixels / aspect)));
    rh = std::min(rh, H);
    rw = std::min(rw, W);
    const std::size_t top = rng.uniform_index(H - rh + 1);
    const std::size_t left = rng.uniform_index(W - rw + 1);

    double mean[3] = {0, 0, 0};
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) mean[c] += img.at(y, x, c);
    for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(H * W);

    Image out = img;
    for (std::size_t y = top; y < top + rh; ++y)
        for (std::size_t x = left; x < left + rw; ++x)
            for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = mean[c];
    return out;
}

Image sobel(const Image& img) {
    const std::size_t H = img.height, W = img.width;
    Image gray = (img.channels == 3) ? to_grayscale(img) : img;

    auto pix = [&](long y, long x) {
        y = std::min<long>(std::max<long>(y, 0), static_cast<long>(H) - 1);
        x = std::min<long>(std::max<long>(x, 0), static_cast<long>(W) - 1);
        return gray.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0);
    };

    std::vector<double> mag(H * W);
    double max_m = 0.0;
    for (long y = 0; y < static_cast<long>(H); ++y)
        for (long x = 0; x < static_cast<long>(W); ++x) {
            double gx = -pix(y - 1, x - 1) + pix(y - 1, x + 1)
                        - 2 * pix(y, x - 1) + 2 * pix(y, x + 1)
                        - pix(y + 1, x - 1) + pix(y + 1, x + 1);
            double gy = -pix(y - 1, x - 1) - 2 * pix(y - 1, x) - pix(y - 1, x + 1)
                        + pix(y + 1, x - 1) + 2 * pix(y + 1, x) + pix(y + 1, x + 1);
            double m = std::sqrt(gx * gx + gy * gy);
            mag[static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)] = m;
            max_m = std::max(max_m, m);
        }

    Image out(H, W, img.channels);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
            double v = max_m > 0.0 ? mag[y * W + x] / max_m : 0.0;
            v = std::min(1.0, std::max(0.0, v));
            for (std::size_t c = 0; c < img.channels; ++c) out.at(y, x, c) = v;
        }
    return out;
}

Image compose(const std::vector<AugmentationSpec>& children, const Image& img, RngStream& rng,
              const nn::Model* model) {
    if (children.size() < 2) throw ValidationError("compose: needs at least 2 children");
    Image cur = img;
    for (const auto& child : children) {
        if (child.kind == AugKind::Compose) throw ValidationError("compose: nesting not allowed");
        cur = apply(child, cur, rng, model);
    }
    return cur;
}

Image apply(const AugmentationSpec& spec, const Image& img, RngStream& rng,
            const nn::Model* model) {
    switch (spec.kind) {
        case AugKind::Flip:
            return flip_lr(img);
        case AugKind::RandomSaturation:
            return random_saturation(img, rng, spec.params.saturation_lo, spec.params.saturation_hi);
        case AugKind::CropResize:
            return crop_resize(img, spec.params.crop_fraction);
        case AugKind::Brightness:
            return brightness(img, spec.params.brightness_delta);
        case AugKind::RandomErase:
            return random_erase(img, rng, spec.params.erase_area_lo, spec.params.erase_area_hi,
                                spec.params.erase_aspect_lo, spec.params.erase_aspect_hi);
        case AugKind::Sobel:
            return sobel(img);
        case AugKind::Vap:
            if (model == nullptr) throw ValidationError("vap: requires a model");
            return vap(*model, img, spec.params.vap, rng);
        case AugKind::Compose:
            return compose(spec.children, img, rng, model);
    }
    throw ValidationError("apply: unknown augmentation kind");
}

} // namespace genaug
