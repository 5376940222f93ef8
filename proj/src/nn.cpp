#include "genaug/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "genaug/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace genaug::nn {

namespace {

struct ConvGeom {
    std::size_t out_h, out_w, pad_top, pad_left;
};

ConvGeom conv_geometry(const Layer& l, std::size_t h, std::size_t w) {
    ConvGeom g{};
    if (l.padding == Padding::Same) {
        g.out_h = (h + l.stride - 1) / l.stride;
        g.out_w = (w + l.stride - 1) / l.stride;
        std::size_t need_h = (g.out_h - 1) * l.stride + l.kh;
        std::size_t need_w = (g.out_w - 1) * l.stride + l.kw;
        g.pad_top = need_h > h ? (need_h - h) / 2 : 0;
        g.pad_left = need_w > w ? (need_w - w) / 2 : 0;
    } else {
        if (h < l.kh || w < l.kw) throw ValidationError("conv2d: input smaller than kernel");
        g.out_h = (h - l.kh) / l.stride + 1;
        g.out_w = (w - l.kw) / l.stride + 1;
        g.pad_top = g.pad_left = 0;
    }
    return g;
}

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Dense: return "dense";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2d: return "maxpool2d";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::GlobalAvgPool: return "global_avg_pool";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::Dropout: return "dropout";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "conv2d") return LayerKind::Conv2d;
    if (s == "dense") return LayerKind::Dense;
    if (s == "relu") return LayerKind::Relu;
    if (s == "maxpool2d") return LayerKind::MaxPool2d;
    if (s == "flatten") return LayerKind::Flatten;
    if (s == "global_avg_pool") return LayerKind::GlobalAvgPool;
    if (s == "softmax") return LayerKind::Softmax;
    if (s == "dropout") return LayerKind::Dropout;
    throw ValidationError("model manifest: unknown layer kind '" + s + "'");
}

Tensor apply_layer(const Layer& l, const Tensor& in) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            const std::size_t h = in.shape[0], w = in.shape[1], ci = in.shape[2];
            ConvGeom g = conv_geometry(l, h, w);
            Tensor out = Tensor::zeros({g.out_h, g.out_w, l.out_channels});
            for (std::size_t oy = 0; oy < g.out_h; ++oy)
                for (std::size_t ox = 0; ox < g.out_w; ++ox)
                    for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
                        double acc = l.bias.data[oc];
                        for (std::size_t ky = 0; ky < l.kh; ++ky) {
                            long iy = static_cast<long>(oy * l.stride + ky) - static_cast<long>(g.pad_top);
                            if (iy < 0 || iy >= static_cast<long>(h)) continue;
                            for (std::size_t kx = 0; kx < l.kw; ++kx) {
                                long ix = static_cast<long>(ox * l.stride + kx) - static_cast<long>(g.pad_left);
                                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                                const double* px = &in.data[(static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * ci];
                                const double* kr = &l.kernel.data[((oc * ci) * l.kh + ky) * l.kw + kx];
                                for (std::size_t ic = 0; ic < ci; ++ic)
                                    acc += px[ic] * kr[ic * l.kh * l.kw];
                            }
                        }
                        out.data[(oy * g.out_w + ox) * l.out_channels + oc] = acc;
                    }
            return out;
        }
        case LayerKind::Dense: {
            Tensor out = Tensor::zeros({l.out_features});
            for (std::size_t o = 0; o < l.out_features; ++o) {
                double acc = l.bias.data[o];
                const double* row = &l.kernel.data[o * l.in_features];
                for (std::size_t i = 0; i < l.in_features; ++i) acc += row[i] * in.data[i];
                out.data[o] = acc;
            }
            return out;
        }
        case LayerKind::Relu: {
            Tensor out = in;
            for (double& v : out.data) v = std::max(0.0, v);
            return out;
        }
        case LayerKind::MaxPool2d: {
            const std::size_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
            if (h < l.pool_size || w < l.pool_size)
                throw ValidationError("maxpool2d: input smaller than pool window");
            const std::size_t oh = (h - l.pool_size) / l.pool_stride + 1;
            const std::size_t ow = (w - l.pool_size) / l.pool_stride + 1;
            Tensor out = Tensor::zeros({oh, ow, c});
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        double best = -1e300;
                        for (std::size_t ky = 0; ky < l.pool_size; ++ky)
                            for (std::size_t kx = 0; kx < l.pool_size; ++kx) {
                                double v = in.data[((oy * l.pool_stride + ky) * w + ox * l.pool_stride + kx) * c + ch];
                                if (v > best) best = v;
                            }
                        out.data[(oy * ow + ox) * c + ch] = best;
                    }
            return out;
        }
        case LayerKind::Flatten: {
            Tensor out = in;
            out.shape = {in.data.size()};
            return out;
        }
        case LayerKind::GlobalAvgPool: {
            const std::size_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
            Tensor out = Tensor::zeros({c});
            for (std::size_t i = 0; i < h * w; ++i)
                for (std::size_t ch = 0; ch < c; ++ch) out.data[ch] += in.data[i * c + ch];
            for (std::size_t ch = 0; ch < c; ++ch) out.data[ch] /= static_cast<double>(h * w);
            return out;
        }
        case LayerKind::Softmax: {
            Tensor out = in;
            double mx = *std::max_element(in.data.begin(), in.data.end());
            double sum = 0.0;
            for (std::size_t i = 0; i < in.data.size(); ++i) {
                out.data[i] = std::exp(in.data[i] - mx);
                sum += out.data[i];
            }
            for (double& v : out.data) v /= sum;
            return out;
        }
        case LayerKind::Dropout:
            return in; // identity at inference
    }
    throw ValidationError("unknown layer kind");
}

// Gradient w.r.t. the layer input given gradients w.r.t. its output.
// Accumulates weight gradients into wg when non-null. Softmax is excluded;
// objectives supply gradients at the logits directly.
Tensor backward_layer(const Layer& l, const Tensor& in, const Tensor& out, const Tensor& gout,
                      LayerGrads* wg) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            const std::size_t h = in.shape[0], w = in.shape[1], ci = in.shape[2];
            ConvGeom g = conv_geometry(l, h, w);
            Tensor gin = Tensor::zeros(in.shape);
            for (std::size_t oy = 0; oy < g.out_h; ++oy)
                for (std::size_t ox = 0; ox < g.out_w; ++ox)
                    for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
                        double go = gout.data[(oy * g.out_w + ox) * l.out_channels + oc];
                        if (go == 0.0) continue;
                        if (wg) wg->bias.data[oc] += go;
                        for (std::size_t ky = 0; ky < l.kh; ++ky) {
                            long iy = static_cast<long>(oy * l.stride + ky) - static_cast<long>(g.pad_top);
                            if (iy < 0 || iy >= static_cast<long>(h)) continue;
                            for (std::size_t kx = 0; kx < l.kw; ++kx) {
                                long ix = static_cast<long>(ox * l.stride + kx) - static_cast<long>(g.pad_left);
                                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                                std::size_t pbase = (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * ci;
                                for (std::size_t ic = 0; ic < ci; ++ic) {
                                    std::size_t kidx = ((oc * ci + ic) * l.kh + ky) * l.kw + kx;
                                    gin.data[pbase + ic] += go * l.kernel.data[kidx];
                                    if (wg) wg->kernel.data[kidx] += go * in.data[pbase + ic];
                                }
                            }
                        }
                    }
            return gin;
        }
        case LayerKind::Dense: {
            Tensor gin = Tensor::zeros(in.shape);
            for (std::size_t o = 0; o < l.out_features; ++o) {
                double go = gout.data[o];
                if (wg) wg->bias.data[o] += go;
                const double* row = &l.kernel.data[o * l.in_features];
                for (std::size_t i = 0; i < l.in_features; ++i) {
                    gin.data[i] += go * row[i];
                    if (wg) wg->kernel.data[o * l.in_features + i] += go * in.data[i];
                }
            }
            return gin;
        }
        case LayerKind::Relu: {
            Tensor gin = gout;
            for (std::size_t i = 0; i < in.data.size(); ++i)
                if (in.data[i] <= 0.0) gin.data[i] = 0.0;
            return gin;
        }
        case LayerKind::MaxPool2d: {
            const std::size_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
            const std::size_t oh = out.shape[0], ow = out.shape[1];
            Tensor gin = Tensor::zeros(in.shape);
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        // route to the first maximal element in scan order
                        double best = -1e300;
                        std::size_t best_idx = 0;
                        for (std::size_t ky = 0; ky < l.pool_size; ++ky)
                            for (std::size_t kx = 0; kx < l.pool_size; ++kx) {
                                std::size_t idx = ((oy * l.pool_stride + ky) * w + ox * l.pool_stride + kx) * c + ch;
                                if (in.data[idx] > best) {
                                    best = in.data[idx];
                                    best_idx = idx;
                                }
                            }
                        gin.data[best_idx] += gout.data[(oy * ow + ox) * c + ch];
                    }
            return gin;
        }
        case LayerKind::Flatten: {
            Tensor gin = gout;
            gin.shape = in.shape;
            return gin;
        }
        case LayerKind::GlobalAvgPool: {
            const std::size_t h = in.shape[0], w = in.shape[1], c = in.shape[2];
            Tensor gin = Tensor::zeros(in.shape);
            for (std::size_t i = 0; i < h * w; ++i)
                for (std::size_t ch = 0; ch < c; ++ch)
                    gin.data[i * c + ch] = gout.data[ch] / static_cast<double>(h * w);
            return gin;
        }
        case LayerKind::Dropout: {
            return gout;
        }
        case LayerKind::Softmax:
            throw ValidationError("softmax backward is handled at the objective");
    }
    throw ValidationError("unknown layer kind");
}

// Forward pass keeping every activation. acts[0] is the preprocessed input,
// acts[i+1] the output of layer i.
std::vector<Tensor> run_forward(const Model& model, const Image& img) {
    std::vector<Tensor> acts;
    acts.reserve(model.layers.size() + 1);
    acts.push_back(preprocess(model, img));
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        acts.push_back(apply_layer(model.layers[i], acts.back()));
        for (double v : acts.back().data)
            if (!std::isfinite(v))
                throw NumericalError("non-finite activation at layer " + std::to_string(i) + " (" +
                                     layer_kind_name(model.layers[i].kind) + ")");
    }
    return acts;
}

// Backprop from a gradient at the logits (input of the final softmax) down
// to the preprocessed input.
Tensor backprop_from_logits(const Model& model, const std::vector<Tensor>& acts,
                            Tensor grad_logits, std::vector<LayerGrads>* wgs) {
    Tensor grad = std::move(grad_logits);
    for (std::size_t li = model.layers.size() - 1; li-- > 0;) {
        LayerGrads* wg = nullptr;
        if (wgs && model.layers[li].has_weights()) wg = &(*wgs)[li];
        grad = backward_layer(model.layers[li], acts[li], acts[li + 1], grad, wg);
    }
    return grad;
}

} // namespace

std::vector<std::size_t> layer_output_shape(const Layer& l, const std::vector<std::size_t>& in) {
    auto need_hwc = [&](const char* what) {
        if (in.size() != 3)
            throw ValidationError(std::string(what) + ": expects an [H,W,C] input");
    };
    switch (l.kind) {
        case LayerKind::Conv2d: {
            need_hwc("conv2d");
            if (in[2] != l.in_channels)
                throw ValidationError("conv2d: input channels " + std::to_string(in[2]) +
                                      " != layer in_channels " + std::to_string(l.in_channels));
            ConvGeom g = conv_geometry(l, in[0], in[1]);
            return {g.out_h, g.out_w, l.out_channels};
        }
        case LayerKind::Dense:
            if (in.size() != 1 || in[0] != l.in_features)
                throw ValidationError("dense: input size mismatch (expected " +
                                      std::to_string(l.in_features) + ")");
            return {l.out_features};
        case LayerKind::Relu:
        case LayerKind::Dropout:
        case LayerKind::Softmax:
            return in;
        case LayerKind::MaxPool2d: {
            need_hwc("maxpool2d");
            if (in[0] < l.pool_size || in[1] < l.pool_size)
                throw ValidationError("maxpool2d: input smaller than pool window");
            return {(in[0] - l.pool_size) / l.pool_stride + 1,
                    (in[1] - l.pool_size) / l.pool_stride + 1, in[2]};
        }
        case LayerKind::Flatten:
            return {shape_product(in)};
        case LayerKind::GlobalAvgPool:
            need_hwc("global_avg_pool");
            return {in[2]};
    }
    throw ValidationError("unknown layer kind");
}

void Model::validate() const {
    if (input_shape.size() != 3) throw ValidationError("model: input_shape must be [H,W,C]");
    if (input_shape[2] != 1 && input_shape[2] != 3)
        throw ValidationError("model: input channels must be 1 or 3");
    if (num_classes < 2) throw ValidationError("model: num_classes must be >= 2");
    if (mean.size() != input_shape[2] || stddev.size() != input_shape[2])
        throw ValidationError("model: preprocessing mean/std size must match channels");
    for (double s : stddev)
        if (!(s > 0.0)) throw ValidationError("model: std values must be strictly positive");
    if (layers.empty() || layers.back().kind != LayerKind::Softmax)
        throw ValidationError("model: final layer must be softmax");
    for (std::size_t i = 0; i + 1 < layers.size(); ++i)
        if (layers[i].kind == LayerKind::Softmax)
            throw ValidationError("model: softmax allowed only as the final layer");

    std::vector<std::size_t> shape = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.kind == LayerKind::Conv2d) {
            if (l.stride < 1) throw ValidationError("conv2d: stride must be >= 1");
            if (l.kernel.data.size() != l.out_channels * l.in_channels * l.kh * l.kw ||
                l.bias.data.size() != l.out_channels)
                throw ValidationError("conv2d: weight shape mismatch at layer " + std::to_string(i));
        }
        if (l.kind == LayerKind::Dense) {
            if (l.kernel.data.size() != l.out_features * l.in_features ||
                l.bias.data.size() != l.out_features)
                throw ValidationError("dense: weight shape mismatch at layer " + std::to_string(i));
        }
        shape = layer_output_shape(l, shape);
    }
    if (shape.size() != 1 || shape[0] != num_classes)
        throw ValidationError("model: final output length != num_classes");
}

std::size_t argmax(const ProbVector& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

Tensor preprocess(const Model& model, const Image& img) {
    if (img.height != model.input_shape[0] || img.width != model.input_shape[1] ||
        img.channels != model.input_shape[2])
        throw ValidationError("preprocess: image shape does not match model input_shape");
    Tensor out = img.data;
    const std::size_t c = img.channels;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        std::size_t ch = i % c;
        out.data[i] = (out.data[i] - model.mean[ch]) / model.stddev[ch];
    }
    return out;
}

ProbVector forward(const Model& model, const Image& img) {
    std::vector<Tensor> acts = run_forward(model, img);
    return acts.back().data;
}

Tensor input_gradient(const Model& model, const Image& img, const Objective& objective) {
    std::vector<Tensor> acts = run_forward(model, img);
    const Tensor& probs = acts.back();
    const std::size_t n = probs.data.size();

    Tensor grad_logits = Tensor::zeros({n});
    if (objective.type == Objective::Type::LogProbOfClass) {
        if (objective.class_index >= n)
            throw ValidationError("input_gradient: class index out of range");
        for (std::size_t i = 0; i < n; ++i) grad_logits.data[i] = -probs.data[i];
        grad_logits.data[objective.class_index] += 1.0;
    } else {
        if (objective.target.size() != n)
            throw ValidationError("input_gradient: target length mismatch");
        // d/dz KL(target || softmax(z)) = softmax(z) - target
        for (std::size_t i = 0; i < n; ++i)
            grad_logits.data[i] = probs.data[i] - objective.target[i];
    }

    Tensor grad = backprop_from_logits(model, acts, std::move(grad_logits), nullptr);
    const std::size_t c = model.input_shape[2];
    for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] /= model.stddev[i % c];
    for (double v : grad.data)
        if (!std::isfinite(v)) throw NumericalError("input_gradient: non-finite gradient");
    return grad;
}

std::vector<LayerGrads> weight_gradients(const Model& model, const std::vector<Image>& images,
                                         const std::vector<std::size_t>& labels,
                                         double* mean_loss_out) {
    if (images.empty() || images.size() != labels.size())
        throw ValidationError("weight_gradients: empty batch or size mismatch");
    for (std::size_t lbl : labels)
        if (lbl >= model.num_classes) throw ValidationError("weight_gradients: label out of range");

    std::vector<LayerGrads> wgs(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (model.layers[i].has_weights()) {
            wgs[i].kernel = Tensor::zeros(model.layers[i].kernel.shape);
            wgs[i].bias = Tensor::zeros(model.layers[i].bias.shape);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(images.size());
    double loss = 0.0;
    for (std::size_t s = 0; s < images.size(); ++s) {
        std::vector<Tensor> acts = run_forward(model, images[s]);
        const Tensor& probs = acts.back();
        double p = std::max(probs.data[labels[s]], 1e-300);
        loss += -std::log(p) * inv_n;

        Tensor grad_logits = Tensor::zeros({probs.data.size()});
        for (std::size_t i = 0; i < probs.data.size(); ++i)
            grad_logits.data[i] = probs.data[i] * inv_n;
        grad_logits.data[labels[s]] -= inv_n;
        backprop_from_logits(model, acts, std::move(grad_logits), &wgs);
    }

    for (const auto& wg : wgs)
        for (const Tensor* t : {&wg.kernel, &wg.bias})
            for (double v : t->data)
                if (!std::isfinite(v)) throw NumericalError("weight_gradients: non-finite gradient");
    if (mean_loss_out) *mean_loss_out = loss;
    return wgs;
}

namespace {

json layer_to_json(const Layer& l) {
    json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::Conv2d:
            j["out_channels"] = l.out_channels;
            j["in_channels"] = l.in_channels;
            j["kernel_size"] = {l.kh, l.kw};
            j["stride"] = l.stride;
            j["padding"] = l.padding == Padding::Same ? "same" : "valid";
            break;
        case LayerKind::Dense:
            j["out_features"] = l.out_features;
            j["in_features"] = l.in_features;
            break;
        case LayerKind::MaxPool2d:
            j["size"] = l.pool_size;
            j["stride"] = l.pool_stride;
            break;
        case LayerKind::Dropout:
            j["rate"] = l.dropout_rate;
            break;
        default:
            break;
    }
    return j;
}

Layer layer_from_json(const json& j) {
    Layer l;
    l.kind = layer_kind_from_name(j.at("kind").get<std::string>());
    switch (l.kind) {
        case LayerKind::Conv2d: {
            l.out_channels = j.at("out_channels").get<std::size_t>();
            l.in_channels = j.at("in_channels").get<std::size_t>();
            auto ks = j.at("kernel_size");
            l.kh = ks.at(0).get<std::size_t>();
            l.kw = ks.at(1).get<std::size_t>();
            l.stride = j.value("stride", std::size_t{1});
            std::string pad = j.value("padding", std::string("valid"));
            if (pad == "same")
                l.padding = Padding::Same;
            else if (pad == "valid")
                l.padding = Padding::Valid;
            else
                throw ValidationError("conv2d: padding must be 'same' or 'valid'");
            if (l.out_channels == 0 || l.in_channels == 0 || l.kh == 0 || l.kw == 0 || l.stride == 0)
                throw ValidationError("conv2d: zero-sized parameter");
            break;
        }
        case LayerKind::Dense:
            l.out_features = j.at("out_features").get<std::size_t>();
            l.in_features = j.at("in_features").get<std::size_t>();
            if (l.out_features == 0 || l.in_features == 0)
                throw ValidationError("dense: zero-sized parameter");
            break;
        case LayerKind::MaxPool2d:
            l.pool_size = j.value("size", std::size_t{2});
            l.pool_stride = j.value("stride", l.pool_size);
            if (l.pool_size == 0 || l.pool_stride == 0)
                throw ValidationError("maxpool2d: zero-sized parameter");
            break;
        case LayerKind::Dropout:
            l.dropout_rate = j.value("rate", 0.0);
            break;
        default:
            break;
    }
    return l;
}

std::size_t layer_weight_count(const Layer& l) {
    if (l.kind == LayerKind::Conv2d) return l.out_channels * l.in_channels * l.kh * l.kw + l.out_channels;
    if (l.kind == LayerKind::Dense) return l.out_features * l.in_features + l.out_features;
    return 0;
}

} // namespace

Model load_model(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ValidationError("cannot open model manifest: " + manifest_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("malformed model manifest " + manifest_path + ": " + e.what());
    }

    Model m;
    try {
        m.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
        m.num_classes = j.at("num_classes").get<std::size_t>();
        m.mean = j.at("preprocessing").at("mean").get<std::vector<double>>();
        m.stddev = j.at("preprocessing").at("std").get<std::vector<double>>();
        for (const auto& lj : j.at("layers")) m.layers.push_back(layer_from_json(lj));
        if (j.contains("metadata"))
            for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it)
                m.metadata[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        std::string dtype = j.value("weight_dtype", std::string("f32le"));
        if (dtype != "f32le") throw ValidationError("model: unsupported weight_dtype '" + dtype + "'");
    } catch (const json::exception& e) {
        throw ValidationError("model manifest " + manifest_path + ": " + e.what());
    }

    fs::path blob_path = fs::path(manifest_path).parent_path() / j.at("weights_file").get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) throw ValidationError("cannot open weight blob: " + blob_path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());

    std::size_t offset = 0;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        Layer& l = m.layers[li];
        std::size_t count = layer_weight_count(l);
        if (count == 0) continue;
        if (bytes.size() < offset + count * 4)
            throw ValidationError("weight blob truncated at layer " + std::to_string(li) + " (" +
                                  layer_kind_name(l.kind) + "): need " + std::to_string(count) +
                                  " values");
        std::vector<double> vals(count);
        for (std::size_t i = 0; i < count; ++i) {
            const unsigned char* b =
                reinterpret_cast<const unsigned char*>(bytes.data()) + offset + i * 4;
            std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                              (static_cast<std::uint32_t>(b[1]) << 8) |
                              (static_cast<std::uint32_t>(b[2]) << 16) |
                              (static_cast<std::uint32_t>(b[3]) << 24);
            float f;
            std::memcpy(&f, &u, 4);
            if (!std::isfinite(f))
                throw ValidationError("non-finite weight at layer " + std::to_string(li));
            vals[i] = static_cast<double>(f);
        }
        offset += count * 4;
        if (l.kind == LayerKind::Conv2d) {
            l.kernel = Tensor({l.out_channels, l.in_channels, l.kh, l.kw},
                              std::vector<double>(vals.begin(), vals.end() - static_cast<long>(l.out_channels)));
            l.bias = Tensor({l.out_channels},
                            std::vector<double>(vals.end() - static_cast<long>(l.out_channels), vals.end()));
        } else {
            l.kernel = Tensor({l.out_features, l.in_features},
                              std::vector<double>(vals.begin(), vals.end() - static_cast<long>(l.out_features)));
            l.bias = Tensor({l.out_features},
                            std::vector<double>(vals.end() - static_cast<long>(l.out_features), vals.end()));
        }
    }
    if (offset != bytes.size())
        throw ValidationError("weight blob has " + std::to_string(bytes.size() - offset) +
                              " trailing bytes");
    m.validate();
    return m;
}

void save_model(const std::string& manifest_path, const Model& model) {
    model.validate();
    fs::path mpath(manifest_path);
    std::string blob_name = mpath.stem().string() + ".bin";

    json j;
    j["format_version"] = 1;
    j["input_shape"] = model.input_shape;
    j["num_classes"] = model.num_classes;
    j["preprocessing"] = {{"mean", model.mean}, {"std", model.stddev}};
    j["layers"] = json::array();
    for (const Layer& l : model.layers) j["layers"].push_back(layer_to_json(l));
    j["weights_file"] = blob_name;
    j["weight_dtype"] = "f32le";
    j["metadata"] = json::object();
    for (const auto& [k, v] : model.metadata) j["metadata"][k] = v;

    std::ofstream out(mpath);
    if (!out) throw ValidationError("cannot write model manifest: " + manifest_path);
    out << j.dump(2) << "\n";

    std::ofstream blob(mpath.parent_path() / blob_name, std::ios::binary);
    if (!blob) throw ValidationError("cannot write weight blob for: " + manifest_path);
    auto write_f32 = [&](const Tensor& t) {
        for (double v : t.data) {
            float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
            blob.write(b, 4);
        }
    };
    for (const Layer& l : model.layers) {
        if (!l.has_weights()) continue;
        write_f32(l.kernel);
        write_f32(l.bias);
    }
}

} // namespace genaug::nn
