#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "genaug/tensor.hpp"

namespace genaug::nn {

enum class LayerKind { Conv2d, Dense, Relu, MaxPool2d, Flatten, GlobalAvgPool, Softmax, Dropout };
enum class Padding { Valid, Same };

struct Layer {
    LayerKind kind = LayerKind::Relu;

    // conv2d: kernel [outC, inC, kH, kW], bias [outC]
    // dense: kernel [out, in], bias [out]
    Tensor kernel;
    Tensor bias;
    std::size_t out_channels = 0, in_channels = 0, kh = 0, kw = 0;
    std::size_t out_features = 0, in_features = 0;
    std::size_t stride = 1;
    Padding padding = Padding::Valid;
    std::size_t pool_size = 2, pool_stride = 2;
    double dropout_rate = 0.0; // metadata only; identity at inference

    bool has_weights() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
};

struct Model {
    std::vector<Layer> layers;
    std::vector<double> mean, stddev; // per input channel
    std::size_t num_classes = 0;
    std::vector<std::size_t> input_shape; // [H, W, C]
    std::map<std::string, std::string> metadata;

    // Checks layer shape compatibility end to end; the final layer must be
    // the model's single Softmax producing num_classes values.
    void validate() const;
};

// Probabilities per class: p >= 0, sum == 1 within 1e-9.
using ProbVector = std::vector<double>;

// Ties broken toward the lower class index.
std::size_t argmax(const ProbVector& p);

Model load_model(const std::string& manifest_path);
void save_model(const std::string& manifest_path, const Model& model);

// (img - mean) / std per channel.
Tensor preprocess(const Model& model, const Image& img);

ProbVector forward(const Model& model, const Image& img);

struct Objective {
    enum class Type { LogProbOfClass, KlAgainstTarget };
    Type type = Type::LogProbOfClass;
    std::size_t class_index = 0;
    ProbVector target; // KlAgainstTarget: KL(target || model output)
};

// Gradient of the objective w.r.t. raw pixels (chained back through
// preprocessing); shape [H, W, C].
Tensor input_gradient(const Model& model, const Image& img, const Objective& objective);

struct LayerGrads {
    Tensor kernel;
    Tensor bias;
};

// Gradients of mean cross-entropy over the batch w.r.t. every trainable
// tensor; one entry per layer (empty for weightless layers). mean_loss_out
// receives the batch loss when non-null.
std::vector<LayerGrads> weight_gradients(const Model& model, const std::vector<Image>& images,
                                         const std::vector<std::size_t>& labels,
                                         double* mean_loss_out = nullptr);

// Shape of a layer's output given its input shape; used for validation.
std::vector<std::size_t> layer_output_shape(const Layer& layer, const std::vector<std::size_t>& in);

} // namespace genaug::nn
