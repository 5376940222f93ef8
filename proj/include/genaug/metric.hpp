#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genaug/augment.hpp"
#include "genaug/nn.hpp"
#include "genaug/zoo.hpp"

namespace genaug::metric {

struct PenaltyConfig {
    std::uint64_t seed = 0;
    std::size_t sample_count = 1000;
    std::vector<AugmentationSpec> entries; // each spec carries its lambda

    void validate() const;
};

struct AugmentationResult {
    std::string name;
    double lambda = 0.0;
    bool skipped = false; // lambda == 0 entries are recorded but not evaluated
    double phi = 0.0;
    std::size_t mismatch_count = 0;
    double confidence_loss_sum = 0.0;
};

struct MetricReport {
    double phi_total = 0.0;
    double phi_per_sample = 0.0;
    std::size_t samples_scored = 0;
    std::uint64_t seed = 0;
    bool truncated = false; // sample_count exceeded the dataset size
    std::vector<AugmentationResult> per_augmentation;
};

// One Algorithm-1 step: penalty for a single (sample, augmentation) pair.
// Matched prediction: -|P(yhat|x) - P(yhat|x')| at the original argmax
// index; changed prediction: -lambda.
double score_sample(const nn::Model& model, const Image& x, const AugmentationSpec& spec,
                    double lambda, RngStream& rng);

MetricReport score_model(const nn::Model& model, const zoo::Dataset& data,
                         const PenaltyConfig& config, unsigned threads = 1);

PenaltyConfig load_penalty_config(const std::string& path);
void save_penalty_config(const std::string& path, const PenaltyConfig& config);

// "table1_row1" .. "table1_row3".
PenaltyConfig preset(const std::string& name);

std::string report_to_json(const MetricReport& report);
void save_report(const std::string& path, const MetricReport& report);
MetricReport load_report(const std::string& path);

} // namespace genaug::metric
