#pragma once

#include <map>
#include <string>
#include <vector>

#include "genaug/metric.hpp"
#include "genaug/zoo.hpp"

namespace genaug::eval {

struct ZooEntry {
    std::string model_id;
    std::vector<std::string> hparam_values; // aligned with the axis list
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double metric_value = 0.0; // phi (any monotone scaling)
};

// train - test accuracy; larger means worse generalization.
double generalization_gap(const ZooEntry& entry);

// Kendall tau-b with tie correction.
double kendall_tau(const std::vector<double>& metric, const std::vector<double>& gap);

struct CmiScore {
    double score = 0.0; // min over conditioning subsets
    std::size_t k = 0;
    std::vector<std::pair<std::string, double>> per_subset;
    std::size_t n_pairs_used = 0;
    std::size_t ties_discarded = 0;
    std::size_t groups_dropped = 0;
};

// Normalized conditional mutual information between sign-of-difference of
// the metric and sign-of-difference of the gap over model pairs, grouped by
// the unordered pair of hyperparameter value-tuples on each size-k axis
// subset; base-2 logs, plug-in probabilities, normalized by the conditional
// entropy of the gap signs, minimized over subsets.
CmiScore cmi_score(const std::vector<std::string>& axes, const std::vector<ZooEntry>& zoo,
                   std::size_t k);

// Joins metric reports to zoo metadata; returns the evaluation report as a
// JSON string. Reports are keyed by model_id.
std::string evaluate_zoo(const zoo::ZooManifest& manifest,
                         const std::map<std::string, metric::MetricReport>& reports, std::size_t k);

} // namespace genaug::eval
