// Independent reference implementations used only to check the library.
// These deliberately avoid sharing code paths with src/: different loop
// structure, straight-line math, no shared helpers beyond the data types.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "genaug/nn.hpp"
#include "genaug/rng.hpp"
#include "genaug/tensor.hpp"

namespace oracle {

using genaug::Image;

inline double clamp01d(double v) { return v < 0 ? 0 : (v > 1 ? 1 : v); }

// flip as an explicit index permutation
inline Image flip(const Image& in) {
    Image out = in;
    for (std::size_t y = 0; y < in.height; ++y)
        for (std::size_t x = 0; x < in.width; ++x)
            for (std::size_t c = 0; c < in.channels; ++c)
                out.data.data[(y * in.width + x) * in.channels + c] =
                    in.data.data[(y * in.width + (in.width - 1 - x)) * in.channels + c];
    return out;
}

inline Image brightness(const Image& in, double delta) {
    Image out = in;
    for (auto& v : out.data.data) v = clamp01d(v + delta);
    return out;
}

inline std::array<double, 3> saturate_pixel(double r, double g, double b, double s) {
    double luma = 0.299 * r + 0.587 * g + 0.114 * b;
    return {clamp01d(luma + s * (r - luma)), clamp01d(luma + s * (g - luma)),
            clamp01d(luma + s * (b - luma))};
}

// independent bilinear sampler (gather form, scalar interpolation weights)
inline Image crop_resize(const Image& in, double fraction) {
    const std::size_t H = in.height, W = in.width, C = in.channels;
    const std::size_t ch = static_cast<std::size_t>(std::floor(fraction * double(H)));
    const std::size_t cw = static_cast<std::size_t>(std::floor(fraction * double(W)));
    const std::size_t oy = (H - ch) / 2, ox = (W - cw) / 2;
    if (ch == H && cw == W) return in;
    Image out(H, W, C);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                double fy = (double(y) + 0.5) / double(H) * double(ch) - 0.5;
                double fx = (double(x) + 0.5) / double(W) * double(cw) - 0.5;
                fy = std::max(0.0, std::min(fy, double(ch) - 1.0));
                fx = std::max(0.0, std::min(fx, double(cw) - 1.0));
                std::size_t y0 = std::size_t(std::floor(fy));
                std::size_t x0 = std::size_t(std::floor(fx));
                std::size_t y1 = std::min(y0 + 1, ch - 1);
                std::size_t x1 = std::min(x0 + 1, cw - 1);
                double wy = fy - double(y0), wx = fx - double(x0);
                double top = in.at(oy + y0, ox + x0, c) * (1 - wx) + in.at(oy + y0, ox + x1, c) * wx;
                double bot = in.at(oy + y1, ox + x0, c) * (1 - wx) + in.at(oy + y1, ox + x1, c) * wx;
                out.at(y, x, c) = clamp01d(top * (1 - wy) + bot * wy);
            }
    return out;
}

// brute-force 3x3 convolution sobel with replicate padding
inline Image sobel(const Image& in) {
    const std::size_t H = in.height, W = in.width;
    std::vector<double> gray(H * W);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            gray[y * W + x] = in.channels == 3
                                  ? clamp01d(0.299 * in.at(y, x, 0) + 0.587 * in.at(y, x, 1) +
                                             0.114 * in.at(y, x, 2))
                                  : in.at(y, x, 0);
    auto g = [&](long y, long x) {
        if (y < 0) y = 0;
        if (x < 0) x = 0;
        if (y >= long(H)) y = long(H) - 1;
        if (x >= long(W)) x = long(W) - 1;
        return gray[std::size_t(y) * W + std::size_t(x)];
    };
    const double KX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const double KY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    std::vector<double> mag(H * W);
    double mx = 0;
    for (long y = 0; y < long(H); ++y)
        for (long x = 0; x < long(W); ++x) {
            double sx = 0, sy = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    sx += KX[dy + 1][dx + 1] * g(y + dy, x + dx);
                    sy += KY[dy + 1][dx + 1] * g(y + dy, x + dx);
                }
            double m = std::sqrt(sx * sx + sy * sy);
            mag[std::size_t(y) * W + std::size_t(x)] = m;
            if (m > mx) mx = m;
        }
    Image out(H, W, in.channels);
    for (std::size_t i = 0; i < H * W; ++i) {
        double v = mx > 0 ? mag[i] / mx : 0.0;
        for (std::size_t c = 0; c < in.channels; ++c)
            out.data.data[i * in.channels + c] = clamp01d(v);
    }
    return out;
}

// re-implementation of the random-erase draw procedure from the stream
struct EraseDraw {
    std::size_t top, left, h, w;
};
inline EraseDraw erase_draw(genaug::RngStream& rng, std::size_t H, std::size_t W, double area_lo,
                            double area_hi, double aspect_lo, double aspect_hi) {
    double a = area_lo + rng.next_double() * (area_hi - area_lo);
    double r = aspect_lo + rng.next_double() * (aspect_hi - aspect_lo);
    double px = a * double(H) * double(W);
    std::size_t h = std::size_t(std::ceil(std::sqrt(px * r)));
    std::size_t w = std::size_t(std::ceil(std::sqrt(px / r)));
    if (h > H) h = H;
    if (w > W) w = W;
    std::size_t top = std::size_t(rng.next_double() * double(H - h + 1));
    std::size_t left = std::size_t(rng.next_double() * double(W - w + 1));
    return {top, left, h, w};
}

// straight-line forward pass for a fixed tiny architecture:
// conv 3x3 same stride 1 -> relu -> flatten -> dense -> softmax,
// with preprocessing (v - mean) / std per channel.
inline std::vector<double> forward_small_cnn(const genaug::nn::Model& m, const Image& img) {
    const std::size_t H = img.height, W = img.width, C = img.channels;
    const auto& conv = m.layers[0];
    const auto& dense = m.layers[3];
    const std::size_t OC = conv.out_channels;

    std::vector<double> x(H * W * C);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx)
            for (std::size_t c = 0; c < C; ++c)
                x[(y * W + xx) * C + c] = (img.at(y, xx, c) - m.mean[c]) / m.stddev[c];

    std::vector<double> act(H * W * OC);
    for (std::size_t oc = 0; oc < OC; ++oc)
        for (long y = 0; y < long(H); ++y)
            for (long xx = 0; xx < long(W); ++xx) {
                double s = conv.bias.data[oc];
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        long iy = y + dy, ix = xx + dx;
                        if (iy < 0 || ix < 0 || iy >= long(H) || ix >= long(W)) continue;
                        for (std::size_t ic = 0; ic < C; ++ic)
                            s += x[(std::size_t(iy) * W + std::size_t(ix)) * C + ic] *
                                 conv.kernel.data[((oc * C + ic) * 3 + std::size_t(dy + 1)) * 3 +
                                                  std::size_t(dx + 1)];
                    }
                double v = s > 0 ? s : 0;
                act[(std::size_t(y) * W + std::size_t(xx)) * OC + oc] = v;
            }

    std::vector<double> logits(m.num_classes);
    for (std::size_t k = 0; k < m.num_classes; ++k) {
        double s = dense.bias.data[k];
        for (std::size_t i = 0; i < act.size(); ++i)
            s += dense.kernel.data[k * act.size() + i] * act[i];
        logits[k] = s;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    std::vector<double> p(m.num_classes);
    for (std::size_t k = 0; k < m.num_classes; ++k) {
        p[k] = std::exp(logits[k] - mx);
        z += p[k];
    }
    for (auto& v : p) v /= z;
    return p;
}

// KL by plain summation
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0) s += p[i] * std::log(p[i] / std::max(q[i], 1e-12));
    }
    return s;
}

// O(n^2) pair-counting Kendall tau-b
inline double kendall(const std::vector<double>& a, const std::vector<double>& b) {
    long long nc = 0, nd = 0, tx = 0, ty = 0;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = a[i] - a[j], dy = b[i] - b[j];
            if (dx == 0) ++tx;
            if (dy == 0) ++ty;
            if (dx != 0 && dy != 0) {
                if ((dx > 0) == (dy > 0))
                    ++nc;
                else
                    ++nd;
            }
        }
    double n0 = double(n) * double(n - 1) / 2;
    double den = std::sqrt((n0 - double(tx)) * (n0 - double(ty)));
    return den == 0 ? 0.0 : double(nc - nd) / den;
}

// brute-force normalized conditional MI from explicit contingency tables;
// pairs carry (group key, a, b) with a, b in {-1, +1}
struct CmiPair {
    std::string group;
    int a, b;
};
inline double cmi_from_pairs(const std::vector<CmiPair>& pairs) {
    std::map<std::string, std::array<double, 4>> tables;
    for (const auto& p : pairs)
        tables[p.group][(p.a > 0 ? 2 : 0) + (p.b > 0 ? 1 : 0)] += 1;
    double total = 0;
    for (auto it = tables.begin(); it != tables.end();) {
        double n = it->second[0] + it->second[1] + it->second[2] + it->second[3];
        if (n < 2) {
            it = tables.erase(it);
        } else {
            total += n;
            ++it;
        }
    }
    if (total == 0) return -1; // unusable
    double mi = 0, hg = 0;
    const double LN2 = std::log(2.0);
    for (const auto& [key, t] : tables) {
        double n = t[0] + t[1] + t[2] + t[3];
        double w = n / total;
        double am = t[0] + t[1], ap = t[2] + t[3];
        double bm = t[0] + t[2], bp = t[1] + t[3];
        for (int ai = 0; ai < 2; ++ai)
            for (int bi = 0; bi < 2; ++bi) {
                double nab = t[ai * 2 + bi];
                if (nab == 0) continue;
                double pa = (ai ? ap : am) / n, pb = (bi ? bp : bm) / n;
                mi += w * (nab / n) * std::log((nab / n) / (pa * pb)) / LN2;
            }
        if (bm > 0) hg -= w * (bm / n) * std::log(bm / n) / LN2;
        if (bp > 0) hg -= w * (bp / n) * std::log(bp / n) / LN2;
    }
    if (hg <= 0) return 0;
    double v = mi / hg;
    return v < 0 ? 0 : (v > 1 ? 1 : v);
}

// central finite difference of f at coordinate i
template <typename F>
double central_diff(F&& f, std::vector<double>& xs, std::size_t i, double h) {
    double orig = xs[i];
    xs[i] = orig + h;
    double fp = f();
    xs[i] = orig - h;
    double fm = f();
    xs[i] = orig;
    return (fp - fm) / (2 * h);
}

} // namespace oracle
