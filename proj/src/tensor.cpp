#include "genaug/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "genaug/errors.hpp"

namespace genaug {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    for (std::size_t e : shape) {
        if (e == 0) throw ValidationError("tensor: zero extent in shape");
    }
    if (shape_product(shape) != data.size()) {
        throw ValidationError("tensor: shape/data length mismatch (shape product " +
                              std::to_string(shape_product(shape)) + ", data length " +
                              std::to_string(data.size()) + ")");
    }
    for (double v : data) {
        if (!std::isfinite(v)) throw ValidationError("tensor: non-finite value");
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

Image::Image(std::size_t h, std::size_t w, std::size_t c) : height(h), width(w), channels(c) {
    if (c != 1 && c != 3) throw ValidationError("image: channels must be 1 or 3");
    data = Tensor::zeros({h, w, c});
}

Image::Image(std::size_t h, std::size_t w, std::size_t c, std::vector<double> values)
    : height(h), width(w), channels(c) {
    if (c != 1 && c != 3) throw ValidationError("image: channels must be 1 or 3");
    data = Tensor({h, w, c}, std::move(values));
}

void Image::validate(const std::string& context) const {
    if (channels != 1 && channels != 3)
        throw ValidationError(context + ": channels must be 1 or 3");
    if (data.shape.size() != 3 || data.shape[0] != height || data.shape[1] != width ||
        data.shape[2] != channels)
        throw ValidationError(context + ": image shape mismatch");
    for (double v : data.data) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError(context + ": pixel value outside [0,1]");
    }
}

Image clamp01_tensor(std::size_t h, std::size_t w, std::size_t c, const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[0] != h || t.shape[1] != w || t.shape[2] != c)
        throw ValidationError("clamp01: tensor is not [H,W,C]");
    Image out(h, w, c);
    for (std::size_t i = 0; i < t.data.size(); ++i)
        out.data.data[i] = std::min(1.0, std::max(0.0, t.data[i]));
    return out;
}

Image clamp01(const Image& img) {
    return clamp01_tensor(img.height, img.width, img.channels, img.data);
}

double pixel_luma(const Image& img, std::size_t y, std::size_t x) {
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

Image to_grayscale(const Image& img) {
    if (img.channels != 3) throw ValidationError("to_grayscale: input must have 3 channels");
    Image out(img.height, img.width, 1);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            out.at(y, x, 0) = std::min(1.0, std::max(0.0, pixel_luma(img, y, x)));
    return out;
}

} // namespace genaug
