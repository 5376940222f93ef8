#pragma once

#include <string>
#include <vector>

#include "genaug/rng.hpp"
#include "genaug/tensor.hpp"

namespace genaug::nn {
struct Model;
}

namespace genaug {

enum class AugKind {
    Flip,
    RandomSaturation,
    CropResize,
    Brightness,
    RandomErase,
    Sobel,
    Vap,
    Compose,
};

struct VapParams {
    double epsilon = 0.05;  // global L2 radius in pixel space
    double xi = 1e-3;       // finite-step scale for power iteration
    int iterations = 1;

    void validate() const;
};

struct AugParams {
    double saturation_lo = 1.0;
    double saturation_hi = 2.0;
    double crop_fraction = 0.75;
    double brightness_delta = 0.2;
    double erase_area_lo = 0.10;
    double erase_area_hi = 0.25;
    double erase_aspect_lo = 0.5;
    double erase_aspect_hi = 2.0;
    VapParams vap;
};

struct AugmentationSpec {
    AugKind kind = AugKind::Flip;
    AugParams params;
    std::vector<AugmentationSpec> children; // Compose only
    double lambda = 0.0;

    // "flip", "saturation", ..., "flip+saturation" for compositions.
    std::string name() const;

    void validate() const;
};

const char* aug_kind_name(AugKind kind);
AugKind aug_kind_from_name(const std::string& name);

Image flip_lr(const Image& img);

// out = clamp01(gray + s * (in - gray)), s ~ U[lo, hi]; gray is per-pixel luma.
Image random_saturation(const Image& img, RngStream& rng, double lo = 1.0, double hi = 2.0);
Image saturate(const Image& img, double factor);

// Central crop of side floor(f*H) x floor(f*W), bilinear resize back
// (align-corners = false).
Image crop_resize(const Image& img, double fraction);

Image brightness(const Image& img, double delta);

// Single random rectangle filled with the per-channel image mean.
Image random_erase(const Image& img, RngStream& rng, double area_lo = 0.10,
                   double area_hi = 0.25, double aspect_lo = 0.5, double aspect_hi = 2.0);

// Normalized gradient magnitude; replicate padding, output channels match input.
Image sobel(const Image& img);

// Children applied left to right, sharing the rng.
Image compose(const std::vector<AugmentationSpec>& children, const Image& img, RngStream& rng,
              const nn::Model* model = nullptr);

// Dispatch on spec.kind. Vap requires a model.
Image apply(const AugmentationSpec& spec, const Image& img, RngStream& rng,
            const nn::Model* model = nullptr);

} // namespace genaug
