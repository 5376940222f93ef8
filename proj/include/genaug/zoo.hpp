#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "genaug/nn.hpp"
#include "genaug/tensor.hpp"

namespace genaug::zoo {

struct Dataset {
    std::vector<Image> images;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    std::string split = "train";

    std::size_t size() const { return images.size(); }
    void validate() const;
};

// CIFAR-10 binary batches: each record is 1 label byte + 3072 bytes of
// R, G, B planes (1024 row-major bytes each); pixels mapped to [0,1] by /255.
Dataset load_cifar10(const std::string& dir, const std::string& split);
Dataset load_cifar10_file(const std::string& path);
void save_cifar10_file(const std::string& path, const Dataset& data);

// Native container: one JSON header line {h,w,c,n,num_classes,split}, then
// n*h*w*c little-endian f32 pixels, then n label bytes.
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const Dataset& data);

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 8;
    double learning_rate = 0.05;
    double dropout_rate = 0.0; // recorded as metadata only
    double label_noise = 0.0;  // fraction of training labels randomized
    std::vector<std::size_t> conv_channels = {8};
    std::vector<std::size_t> dense_units = {32};
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    nn::Model model;
    double train_accuracy = 0.0;
    double final_loss = 0.0;
};

double evaluate_accuracy(const nn::Model& model, const Dataset& data);

// Plain SGD on mean cross-entropy; deterministic given the seed. Label
// noise (if any) is applied to a copy of the training labels.
TrainResult train_tiny(const TrainConfig& config, const Dataset& train);

// 8x8 3-channel 4-class toy set: class = (shape, texture) pair, shapes are
// low-frequency masks, textures high-frequency patterns.
Dataset make_toy_dataset(std::size_t n, std::uint64_t seed, const std::string& split);

struct ZooManifest {
    std::vector<std::string> axes;
    struct Entry {
        std::string model_id;
        std::string model_path; // relative to the manifest
        std::map<std::string, std::string> hparams;
        double train_accuracy = 0.0;
        double test_accuracy = 0.0;
    };
    std::vector<Entry> entries;

    void validate() const;
};

ZooManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const ZooManifest& manifest);

struct ZooGrid {
    std::vector<double> learning_rates = {0.1, 0.01};
    std::vector<std::size_t> batch_sizes = {8, 32};
    std::vector<double> label_noises = {0.0, 0.4};
    std::vector<std::uint64_t> seeds = {0, 1};
    std::size_t epochs = 40;
    std::uint64_t base_seed = 0; // mixed with the per-cell seed axis value
};

// Trains every grid cell, writes model manifests + blobs under out_dir and
// returns the manifest (also written to out_dir/zoo.json).
ZooManifest generate_synthetic_zoo(const ZooGrid& grid, const Dataset& train, const Dataset& test,
                                   const std::string& out_dir);

} // namespace genaug::zoo
