#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace genaug {

// Dense row-major array of doubles. Immutable from the caller's side:
// operations return new tensors.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);

    std::size_t size() const { return data.size(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

// Image: [H, W, C] tensor with values in [0, 1], channels 1 or 3.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    Tensor data; // shape [H, W, C]

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c);
    Image(std::size_t h, std::size_t w, std::size_t c, std::vector<double> values);

    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return data.data[(y * width + x) * channels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return data.data[(y * width + x) * channels + c];
    }

    // Throws ValidationError if range/shape/channel invariants are violated.
    void validate(const std::string& context) const;
};

// Clamp every value to [0, 1]. Input must be a finite [H,W,C] tensor.
Image clamp01(const Image& img);
Image clamp01_tensor(std::size_t h, std::size_t w, std::size_t c, const Tensor& t);

// Rec.601 luma: y = 0.299 R + 0.587 G + 0.114 B. Requires 3 channels.
Image to_grayscale(const Image& img);

// Luma of a single pixel (3-channel images).
double pixel_luma(const Image& img, std::size_t y, std::size_t x);

} // namespace genaug
